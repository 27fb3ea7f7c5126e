#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

/// Collapses runs of Unicode whitespace to single spaces and trims the ends.
/// No case folding. Idempotent. Invalid UTF-8 bytes pass through untouched.
std::string normalize_text(std::string_view raw);

/// Splits on whitespace runs (same whitespace set as normalize_text).
std::vector<std::string> whitespace_tokens(std::string_view text);

/// Metric tokenization: whitespace tokens when the trimmed text contains
/// whitespace, individual code points otherwise (handles unsegmented text).
std::vector<std::string> metric_tokens(std::string_view text);

/// Stable 64-bit FNV-1a; used for mock embeddings and cache keys, so it must
/// not change across platforms or releases.
std::uint64_t fnv1a64(std::string_view data) noexcept;

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// CRC-32 (IEEE polynomial) over a byte range.
std::uint32_t crc32(const void* data, std::size_t size) noexcept;

std::string to_hex(std::uint64_t value);

}  // namespace kgrag
