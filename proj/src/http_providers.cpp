#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/providers.hpp"

namespace kgrag {
namespace {

using nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, no trailing slash
};

ParsedUrl parse_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    raise(ErrorCode::InvalidArgument, "base_url must include a scheme: " + base_url);
  }
  const std::string scheme = base_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    raise(ErrorCode::InvalidArgument, "unsupported scheme \"" + scheme + "\" in " + base_url);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    raise(ErrorCode::Provider, "built without TLS support; cannot reach " + base_url);
  }
#endif
  const auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.prefix = base_url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

/// Shared request plumbing: bearer auth, bounded in-flight requests, retries
/// with exponential backoff on transport failures and retryable statuses.
class HttpEndpoint {
 public:
  explicit HttpEndpoint(ProviderConfig config)
      : config_(std::move(config)),
        url_(parse_base_url(config_.base_url)),
        in_flight_(std::max(config_.max_in_flight, 1)) {
    config_.validate();
  }

  json post_json(const std::string& route, const json& body) const {
    const std::string path = url_.prefix + route;
    const std::string full_url = url_.origin + path;
    const std::string payload = body.dump();

    std::string last_failure;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) {
        const auto delay = std::chrono::milliseconds(200LL << (attempt - 1));
        std::this_thread::sleep_for(std::min(delay, std::chrono::milliseconds(5000)));
      }
      in_flight_.acquire();
      auto result = do_post(path, payload);
      in_flight_.release();

      if (!result) {
        last_failure = "transport failure (" + httplib::to_string(result.error()) +
                       ") for " + full_url;
        continue;
      }
      if (result->status == 200) {
        try {
          return json::parse(result->body);
        } catch (const json::exception& e) {
          raise(ErrorCode::Provider,
                "unparseable response from " + full_url + ": " + e.what());
        }
      }
      const std::string status_msg = "endpoint " + full_url + " returned status " +
                                     std::to_string(result->status);
      if (result->status == 429 || result->status >= 500) {
        last_failure = status_msg;
        continue;
      }
      raise(ErrorCode::Provider, status_msg + ": " + result->body.substr(0, 256));
    }
    raise(ErrorCode::Provider, last_failure + " after " +
                                   std::to_string(config_.retries + 1) + " attempts");
  }

  const ProviderConfig& config() const { return config_; }
  std::string describe() const { return config_.model_name + "@" + config_.base_url; }

 private:
  httplib::Result do_post(const std::string& path, const std::string& payload) const {
    // one client per request: httplib clients are not safe for concurrent use
    httplib::Client client(url_.origin);
    const auto timeout =
        std::chrono::microseconds(static_cast<long long>(config_.timeout_seconds * 1e6));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }
    return client.Post(path, headers, payload, "application/json");
  }

  ProviderConfig config_;
  ParsedUrl url_;
  mutable std::counting_semaphore<> in_flight_;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(const ProviderConfig& config) : endpoint_(config) {}

  std::size_t dimension() const override {
    // probed lazily: the wire protocol does not announce it
    if (dim_ == 0) {
      raise(ErrorCode::Provider, "embedding dimension unknown before the first call");
    }
    return dim_;
  }

  std::string identity() const override { return endpoint_.describe(); }

 protected:
  std::vector<EmbeddingVector> embed_impl(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    const auto batch = static_cast<std::size_t>(endpoint_.config().batch_size);
    for (std::size_t start = 0; start < texts.size(); start += batch) {
      const std::size_t end = std::min(texts.size(), start + batch);
      const std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                           texts.begin() + static_cast<std::ptrdiff_t>(end));
      embed_batch(slice, out);
    }
    return out;
  }

 private:
  void embed_batch(const std::vector<std::string>& texts,
                   std::vector<EmbeddingVector>& out) {
    const json body = {{"model", endpoint_.config().model_name}, {"input", texts}};
    const json response = endpoint_.post_json("/v1/embeddings", body);
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].size() != texts.size()) {
      raise(ErrorCode::Provider, "embeddings response: expected " +
                                     std::to_string(texts.size()) + " data entries");
    }
    // order by the protocol's index field; fall back to array order
    std::vector<std::pair<std::size_t, EmbeddingVector>> entries;
    entries.reserve(texts.size());
    std::size_t fallback_index = 0;
    for (const auto& item : response["data"]) {
      if (!item.contains("embedding") || !item["embedding"].is_array()) {
        raise(ErrorCode::Provider, "embeddings response: missing embedding array");
      }
      const std::size_t index =
          item.contains("index") ? item["index"].get<std::size_t>() : fallback_index;
      ++fallback_index;
      entries.emplace_back(index, item["embedding"].get<EmbeddingVector>());
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [index, vec] : entries) {
      if (vec.empty()) raise(ErrorCode::Provider, "embeddings response: empty vector");
      if (dim_ == 0) dim_ = vec.size();
      out.push_back(std::move(vec));
    }
  }

  HttpEndpoint endpoint_;
  std::size_t dim_ = 0;
};

class HttpCompletionProvider final : public CompletionProvider {
 public:
  explicit HttpCompletionProvider(const ProviderConfig& config) : endpoint_(config) {}

  std::string identity() const override { return endpoint_.describe(); }

 protected:
  std::string complete_impl(const std::string& prompt) override {
    const json body = {{"model", endpoint_.config().model_name},
                       {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    const json response = endpoint_.post_json("/v1/chat/completions", body);
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty()) {
      raise(ErrorCode::Provider, "completion response: no choices");
    }
    const auto& message = response["choices"][0];
    if (!message.contains("message") || !message["message"].contains("content") ||
        !message["message"]["content"].is_string()) {
      raise(ErrorCode::Provider, "completion response: missing message content");
    }
    std::string text = message["message"]["content"].get<std::string>();
    if (text.empty()) {
      raise(ErrorCode::Provider, "completion response: empty message");
    }
    return text;
  }

 private:
  HttpEndpoint endpoint_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> make_http_embedding_provider(const ProviderConfig& config) {
  return std::make_unique<HttpEmbeddingProvider>(config);
}

std::unique_ptr<CompletionProvider> make_http_completion_provider(const ProviderConfig& config) {
  return std::make_unique<HttpCompletionProvider>(config);
}

}  // namespace kgrag
