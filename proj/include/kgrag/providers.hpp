#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kgrag {

using EmbeddingVector = std::vector<float>;

/// cos(a, b) = dot / (|a|·|b|), accumulated in double, clamped to [-1, 1].
/// Raises on dimension mismatch or zero-norm input.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct ProviderConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;   // environment variable holding the key
  double timeout_seconds = 30.0;
  int max_in_flight = 4;
  int batch_size = 32;
  int retries = 3;

  void validate() const;
};

/// Embedding endpoint. Implementations must be safe to share across threads;
/// results are positional (vector i corresponds to texts[i]).
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One vector per input, same order, uniform dimension, all values finite.
  /// The batch must be nonempty and every text nonempty.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

  virtual std::size_t dimension() const = 0;
  virtual std::string identity() const = 0;

  /// Total embed() invocations on this provider.
  std::uint64_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual std::vector<EmbeddingVector> embed_impl(const std::vector<std::string>& texts) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

/// Chat-completion endpoint; returns the first message text verbatim.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;

  std::string complete(const std::string& prompt);

  virtual std::string identity() const = 0;
  std::uint64_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual std::string complete_impl(const std::string& prompt) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Deterministic offline mocks

/// Pure function of (seed, text): hashes the whitespace-token multiset of the
/// text and projects it into `dim` dimensions, unit-normalized. Texts with
/// equal token multisets map to byte-identical vectors.
class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::uint64_t seed = 0, std::size_t dim = 64);

  std::size_t dimension() const override { return dim_; }
  std::string identity() const override;

  EmbeddingVector embed_one(const std::string& text) const;

 protected:
  std::vector<EmbeddingVector> embed_impl(const std::vector<std::string>& texts) override;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

struct ScriptedReply {
  std::string match;  // substring looked up in the prompt
  std::string reply;
};

/// Deterministic completion stand-in. Modes:
///  - canned: always returns `canned_reply`
///  - echo_last_line: returns the last non-empty prompt line
///  - scripted: returns the reply whose match string occurs latest in the
///    prompt, falling back to canned/echo behavior when nothing matches.
class MockCompletionProvider final : public CompletionProvider {
 public:
  enum class Mode { Canned, EchoLastLine, Scripted };

  static std::unique_ptr<MockCompletionProvider> canned(std::string reply);
  static std::unique_ptr<MockCompletionProvider> echo_last_line();
  static std::unique_ptr<MockCompletionProvider> scripted(std::vector<ScriptedReply> replies,
                                                          Mode fallback = Mode::EchoLastLine,
                                                          std::string fallback_reply = "");

  std::string identity() const override;

 protected:
  std::string complete_impl(const std::string& prompt) override;

 private:
  MockCompletionProvider() = default;

  Mode mode_ = Mode::EchoLastLine;
  std::string canned_reply_;
  std::vector<ScriptedReply> replies_;
  Mode fallback_ = Mode::EchoLastLine;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP providers (see http_providers.cpp)

std::unique_ptr<EmbeddingProvider> make_http_embedding_provider(const ProviderConfig& config);
std::unique_ptr<CompletionProvider> make_http_completion_provider(const ProviderConfig& config);

}  // namespace kgrag
