#include <atomic>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/providers.hpp"

using kgrag::Error;
using kgrag::ErrorCode;
using kgrag::MockCompletionProvider;
using kgrag::MockEmbeddingProvider;
using kgrag::ProviderConfig;
using kgrag::cosine_similarity;
using nlohmann::json;

TEST_CASE("cosine similarity matches hand-computed values") {
  const std::vector<float> a{1.0f, 2.0f, 3.0f};
  const std::vector<float> b{4.0f, 5.0f, 6.0f};
  // dot = 32, |a|^2 = 14, |b|^2 = 77
  CHECK(cosine_similarity(a, b) == doctest::Approx(32.0 / std::sqrt(14.0 * 77.0)).epsilon(1e-12));

  const std::vector<float> x{1.0f, 0.0f};
  const std::vector<float> y{0.0f, 1.0f};
  CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));
  const std::vector<float> nx{-1.0f, 0.0f};
  CHECK(cosine_similarity(x, nx) == doctest::Approx(-1.0));
}

TEST_CASE("cosine similarity rejects mismatched and zero vectors") {
  const std::vector<float> a{1.0f, 2.0f};
  const std::vector<float> b{1.0f, 2.0f, 3.0f};
  const std::vector<float> z{0.0f, 0.0f};
  CHECK_THROWS_AS(cosine_similarity(a, b), Error);
  CHECK_THROWS_AS(cosine_similarity(a, z), Error);
  CHECK_THROWS_AS(cosine_similarity({}, {}), Error);
}

TEST_CASE("mock embeddings are deterministic and unit length") {
  MockEmbeddingProvider p1(42, 32);
  MockEmbeddingProvider p2(42, 32);
  const auto v1 = p1.embed({"the quick brown fox"});
  const auto v2 = p2.embed({"the quick brown fox"});
  REQUIRE(v1.size() == 1);
  REQUIRE(v1[0].size() == 32);
  CHECK(v1[0] == v2[0]);

  double norm = 0.0;
  for (const float x : v1[0]) norm += static_cast<double>(x) * x;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("mock embeddings depend only on the token multiset") {
  MockEmbeddingProvider p(7, 16);
  const auto v = p.embed({"alpha beta gamma", "gamma  alpha\tbeta", "alpha beta", "alpha alpha beta"});
  CHECK(v[0] == v[1]);         // order and spacing do not matter
  CHECK(v[0] != v[2]);         // different multiset
  CHECK(v[2] != v[3]);         // multiplicity matters
}

TEST_CASE("different seeds give different vectors") {
  MockEmbeddingProvider a(1, 16);
  MockEmbeddingProvider b(2, 16);
  CHECK(a.embed({"same text"})[0] != b.embed({"same text"})[0]);
  CHECK(a.identity() != b.identity());
}

TEST_CASE("embed validates the batch and counts calls") {
  MockEmbeddingProvider p(0, 8);
  CHECK(p.calls() == 0);
  CHECK_THROWS_AS(p.embed({}), Error);
  CHECK_THROWS_AS(p.embed({"ok", ""}), Error);
  CHECK(p.calls() == 0);  // validation failures are not calls
  p.embed({"one"});
  p.embed({"two", "three"});
  CHECK(p.calls() == 2);
  CHECK_THROWS_AS(MockEmbeddingProvider(0, 0), Error);
}

TEST_CASE("canned and echo completion mocks") {
  auto canned = MockCompletionProvider::canned("always this");
  CHECK(canned->complete("whatever") == "always this");
  CHECK(canned->calls() == 1);

  auto echo = MockCompletionProvider::echo_last_line();
  CHECK(echo->complete("first\nsecond\nthird") == "third");
  CHECK(echo->complete("line\n  spaced out  \n\n\n") == "spaced out");
  CHECK_THROWS_AS(echo->complete(""), Error);
}

TEST_CASE("scripted completion picks the latest match and falls back") {
  auto p = MockCompletionProvider::scripted(
      {{"alpha", "A"}, {"beta", "B"}},
      MockCompletionProvider::Mode::Canned, "fallback");
  CHECK(p->complete("alpha ... beta") == "B");
  CHECK(p->complete("beta ... alpha") == "A");
  CHECK(p->complete("nothing matches") == "fallback");

  auto echo_fb = MockCompletionProvider::scripted({{"alpha", "A"}});
  CHECK(echo_fb->complete("no match\nlast line") == "last line");
}

TEST_CASE("provider config validation") {
  ProviderConfig config;
  config.base_url = "http://localhost:1234";
  config.model_name = "m";
  CHECK_NOTHROW(config.validate());
  config.max_in_flight = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.max_in_flight = 1;
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.batch_size = 1;
  config.timeout_seconds = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
  config.timeout_seconds = 5.0;
  config.retries = -1;
  CHECK_THROWS_AS(config.validate(), Error);
}

namespace {

struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  explicit TestServer() = default;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~TestServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

ProviderConfig http_config(const std::string& base_url) {
  ProviderConfig config;
  config.base_url = base_url;
  config.model_name = "test-model";
  config.timeout_seconds = 5.0;
  config.retries = 0;
  return config;
}

}  // namespace

TEST_CASE("http embedding provider round-trips vectors in index order") {
  TestServer ts;
  ts.server.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    CHECK(body["model"] == "test-model");
    const auto& inputs = body["input"];
    json data = json::array();
    // deliberately reversed; the client must reorder by "index"
    for (std::size_t i = inputs.size(); i-- > 0;) {
      data.push_back({{"index", i}, {"embedding", {static_cast<double>(i), 1.0}}});
    }
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  ts.start();

  auto provider = kgrag::make_http_embedding_provider(http_config(ts.url()));
  const auto vectors = provider->embed({"a", "b", "c"});
  REQUIRE(vectors.size() == 3);
  CHECK(vectors[0] == kgrag::EmbeddingVector{0.0f, 1.0f});
  CHECK(vectors[1] == kgrag::EmbeddingVector{1.0f, 1.0f});
  CHECK(vectors[2] == kgrag::EmbeddingVector{2.0f, 1.0f});
  CHECK(provider->dimension() == 2);
}

TEST_CASE("http completion provider sends chat messages and reads the reply") {
  TestServer ts;
  ts.server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    CHECK(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    const std::string prompt = body["messages"][0]["content"];
    res.set_content(
        json{{"choices", {{{"message", {{"content", "reply to: " + prompt}}}}}}}.dump(),
        "application/json");
  });
  ts.start();

  auto provider = kgrag::make_http_completion_provider(http_config(ts.url()));
  CHECK(provider->complete("hello") == "reply to: hello");
  CHECK(provider->calls() == 1);
}

TEST_CASE("http errors carry the status, url, and body") {
  TestServer ts;
  ts.server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 404;
    res.set_content("no such model", "text/plain");
  });
  ts.start();

  auto provider = kgrag::make_http_completion_provider(http_config(ts.url()));
  try {
    provider->complete("hello");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Provider);
    const std::string msg = e.what();
    CHECK(msg.find("404") != std::string::npos);
    CHECK(msg.find("/v1/chat/completions") != std::string::npos);
    CHECK(msg.find("no such model") != std::string::npos);
  }
}

TEST_CASE("unreachable endpoints fail with the url in the message") {
  auto config = http_config("http://127.0.0.1:1");
  config.timeout_seconds = 1.0;
  auto provider = kgrag::make_http_completion_provider(config);
  try {
    provider->complete("hello");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Provider);
    CHECK(std::string(e.what()).find("127.0.0.1:1") != std::string::npos);
  }
}

TEST_CASE("retries recover from transient server errors") {
  TestServer ts;
  std::atomic<int> attempts{0};
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (attempts.fetch_add(1) == 0) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(json{{"choices", {{{"message", {{"content", "ok"}}}}}}}.dump(),
                    "application/json");
  });
  ts.start();

  auto config = http_config(ts.url());
  config.retries = 2;
  auto provider = kgrag::make_http_completion_provider(config);
  CHECK(provider->complete("hello") == "ok");
  CHECK(attempts.load() == 2);
}

TEST_CASE("max_in_flight bounds concurrent requests") {
  TestServer ts;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = in_flight.fetch_add(1) + 1;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    in_flight.fetch_sub(1);
    res.set_content(json{{"choices", {{{"message", {{"content", "ok"}}}}}}}.dump(),
                    "application/json");
  });
  ts.start();

  auto config = http_config(ts.url());
  config.max_in_flight = 2;
  auto provider = kgrag::make_http_completion_provider(config);

  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { provider->complete("hello"); });
  }
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(provider->calls() == 8);
}

TEST_CASE("invalid base urls are rejected up front") {
  CHECK_THROWS_AS(kgrag::make_http_embedding_provider(http_config("ftp://x")), Error);
  CHECK_THROWS_AS(kgrag::make_http_embedding_provider(http_config("not a url")), Error);
  CHECK_THROWS_AS(kgrag::make_http_embedding_provider(http_config("")), Error);
}
