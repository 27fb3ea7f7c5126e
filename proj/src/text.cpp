#include "kgrag/text.hpp"

#include <array>
#include <cstring>

namespace kgrag {
namespace {

// Decodes one UTF-8 code point at `i`. Returns its byte length and writes the
// code point to `cp`; returns 0 for invalid sequences (caller copies the byte).
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  std::size_t len = 0;
  if ((b0 & 0xE0) == 0xC0) len = 2;
  else if ((b0 & 0xF0) == 0xE0) len = 3;
  else if ((b0 & 0xF8) == 0xF0) len = 4;
  else return 0;
  if (i + len > s.size()) return 0;
  char32_t v = b0 & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    v = (v << 6) | (b & 0x3F);
  }
  cp = v;
  return len;
}

bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x0085:  // next line
    case 0x00A0:  // no-break space
    case 0x1680:
    case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  bool seen_content = false;
  std::size_t i = 0;
  while (i < raw.size()) {
    char32_t cp = 0;
    std::size_t len = decode_utf8(raw, i, cp);
    if (len == 0) {
      // invalid byte: keep verbatim, treat as content
      if (seen_content && pending_space) out.push_back(' ');
      out.push_back(raw[i]);
      pending_space = false;
      seen_content = true;
      ++i;
      continue;
    }
    if (is_space_cp(cp)) {
      pending_space = true;
    } else {
      if (seen_content && pending_space) out.push_back(' ');
      out.append(raw.substr(i, len));
      pending_space = false;
      seen_content = true;
    }
    i += len;
  }
  return out;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    std::size_t len = decode_utf8(text, i, cp);
    if (len == 0) {
      cur.push_back(text[i]);
      ++i;
      continue;
    }
    if (is_space_cp(cp)) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.append(text.substr(i, len));
    }
    i += len;
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> metric_tokens(std::string_view text) {
  const std::string trimmed = normalize_text(text);
  if (trimmed.empty()) return {};
  if (trimmed.find(' ') != std::string::npos) return whitespace_tokens(trimmed);
  // no whitespace: one token per code point
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < trimmed.size()) {
    char32_t cp = 0;
    std::size_t len = decode_utf8(trimmed, i, cp);
    if (len == 0) len = 1;
    tokens.emplace_back(trimmed.substr(i, len));
    i += len;
  }
  return tokens;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t n = 0; n < 256; ++n) {
    std::uint32_t c = n;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
    }
    table[n] = c;
  }
  return table;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t size) noexcept {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

std::string to_hex(std::uint64_t value) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace kgrag
