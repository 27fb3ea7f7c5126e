#include "kgrag/providers.hpp"

#include <algorithm>
#include <cmath>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    raise(ErrorCode::InvalidArgument,
          "cosine_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()) + ")");
  }
  if (a.empty()) {
    raise(ErrorCode::InvalidArgument, "cosine_similarity: empty vectors");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0.0 || nb == 0.0) {
    raise(ErrorCode::InvalidArgument, "cosine_similarity: zero vector");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void ProviderConfig::validate() const {
  if (max_in_flight < 1) raise(ErrorCode::InvalidArgument, "max_in_flight must be >= 1");
  if (timeout_seconds <= 0) raise(ErrorCode::InvalidArgument, "timeout must be > 0");
  if (batch_size < 1) raise(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (retries < 0) raise(ErrorCode::InvalidArgument, "retries must be >= 0");
}

std::vector<EmbeddingVector> EmbeddingProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    raise(ErrorCode::InvalidArgument, "embed: empty batch");
  }
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) {
      raise(ErrorCode::InvalidArgument, "embed: empty text at position " + std::to_string(i));
    }
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  auto vectors = embed_impl(texts);
  if (vectors.size() != texts.size()) {
    raise(ErrorCode::Provider, "embed: provider returned " + std::to_string(vectors.size()) +
                                   " vectors for " + std::to_string(texts.size()) + " inputs");
  }
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) {
      raise(ErrorCode::Provider, "embed: dimension mismatch across batch");
    }
    for (const float x : v) {
      if (!std::isfinite(x)) raise(ErrorCode::Provider, "embed: non-finite value in vector");
    }
  }
  return vectors;
}

std::string CompletionProvider::complete(const std::string& prompt) {
  if (prompt.empty()) {
    raise(ErrorCode::InvalidArgument, "complete: empty prompt");
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  return complete_impl(prompt);
}

// ---------------------------------------------------------------------------

MockEmbeddingProvider::MockEmbeddingProvider(std::uint64_t seed, std::size_t dim)
    : seed_(seed), dim_(dim) {
  if (dim_ == 0) raise(ErrorCode::InvalidArgument, "mock embedding dimension must be >= 1");
}

std::string MockEmbeddingProvider::identity() const {
  return "mock:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

EmbeddingVector MockEmbeddingProvider::embed_one(const std::string& text) const {
  auto tokens = whitespace_tokens(text);
  std::vector<std::uint64_t> hashes;
  hashes.reserve(std::max<std::size_t>(tokens.size(), 1));
  if (tokens.empty()) {
    hashes.push_back(fnv1a64(""));
  } else {
    for (const auto& tok : tokens) hashes.push_back(fnv1a64(tok));
  }
  // sorted accumulation keeps the sum independent of token order,
  // so equal multisets give bit-identical vectors
  std::sort(hashes.begin(), hashes.end());

  std::vector<double> acc(dim_, 0.0);
  for (const std::uint64_t h : hashes) {
    std::uint64_t state = h ^ (seed_ * 0x9E3779B97F4A7C15ULL);
    for (std::size_t i = 0; i < dim_; ++i) {
      const std::uint64_t r = splitmix64(state);
      const double u = static_cast<double>(r >> 11) * 0x1.0p-53;  // [0, 1)
      acc[i] += 2.0 * u - 1.0;
    }
  }
  double norm_sq = 0.0;
  for (const double x : acc) norm_sq += x * x;
  if (norm_sq < 1e-24) {
    acc[0] = 1.0;
    norm_sq = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  EmbeddingVector v(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    v[i] = static_cast<float>(acc[i] * inv);
  }
  return v;
}

std::vector<EmbeddingVector> MockEmbeddingProvider::embed_impl(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<MockCompletionProvider> MockCompletionProvider::canned(std::string reply) {
  std::unique_ptr<MockCompletionProvider> p(new MockCompletionProvider());
  p->mode_ = Mode::Canned;
  p->canned_reply_ = std::move(reply);
  return p;
}

std::unique_ptr<MockCompletionProvider> MockCompletionProvider::echo_last_line() {
  std::unique_ptr<MockCompletionProvider> p(new MockCompletionProvider());
  p->mode_ = Mode::EchoLastLine;
  return p;
}

std::unique_ptr<MockCompletionProvider> MockCompletionProvider::scripted(
    std::vector<ScriptedReply> replies, Mode fallback, std::string fallback_reply) {
  std::unique_ptr<MockCompletionProvider> p(new MockCompletionProvider());
  p->mode_ = Mode::Scripted;
  p->replies_ = std::move(replies);
  p->fallback_ = fallback;
  p->canned_reply_ = std::move(fallback_reply);
  return p;
}

std::string MockCompletionProvider::identity() const {
  switch (mode_) {
    case Mode::Canned: return "mock-completion:canned";
    case Mode::EchoLastLine: return "mock-completion:echo";
    case Mode::Scripted: return "mock-completion:scripted";
  }
  return "mock-completion";
}

namespace {

std::string last_nonempty_line(const std::string& prompt) {
  std::size_t end = prompt.size();
  while (end > 0) {
    std::size_t start = prompt.rfind('\n', end - 1);
    const std::size_t line_begin = (start == std::string::npos) ? 0 : start + 1;
    const std::string line = normalize_text(prompt.substr(line_begin, end - line_begin));
    if (!line.empty()) return line;
    if (start == std::string::npos) break;
    end = start;
  }
  return "";
}

}  // namespace

std::string MockCompletionProvider::complete_impl(const std::string& prompt) {
  if (mode_ == Mode::Canned) return canned_reply_;
  if (mode_ == Mode::Scripted) {
    // latest match wins: the target text sits at the end of built prompts
    const ScriptedReply* best = nullptr;
    std::size_t best_pos = 0;
    for (const auto& r : replies_) {
      if (r.match.empty()) continue;
      const std::size_t pos = prompt.rfind(r.match);
      if (pos != std::string::npos && (best == nullptr || pos >= best_pos)) {
        best = &r;
        best_pos = pos;
      }
    }
    if (best != nullptr) return best->reply;
    if (fallback_ == Mode::Canned) return canned_reply_;
  }
  return last_nonempty_line(prompt);
}

}  // namespace kgrag
