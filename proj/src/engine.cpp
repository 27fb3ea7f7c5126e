#include "kgrag/engine.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/error.hpp"

namespace kgrag {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ProviderConfig http_config(const json& section, const char* role) {
  ProviderConfig cfg;
  try {
    cfg.base_url = section.at("base_url").get<std::string>();
    cfg.model_name = section.at("model").get<std::string>();
    if (section.contains("api_key_env")) {
      cfg.api_key_env = section["api_key_env"].get<std::string>();
    }
    if (section.contains("timeout_seconds")) {
      cfg.timeout_seconds = section["timeout_seconds"].get<double>();
    }
    if (section.contains("max_in_flight")) {
      cfg.max_in_flight = section["max_in_flight"].get<int>();
    }
    if (section.contains("batch_size")) {
      cfg.batch_size = section["batch_size"].get<int>();
    }
    if (section.contains("retries")) cfg.retries = section["retries"].get<int>();
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidArgument,
          std::string(role) + " provider config: " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::unique_ptr<EmbeddingProvider> embedding_from_json(const json& section,
                                                       std::optional<std::uint64_t> seed,
                                                       std::uint64_t fallback_seed) {
  if (section.is_null()) {
    return std::make_unique<MockEmbeddingProvider>(seed.value_or(fallback_seed));
  }
  const std::string kind = section.value("kind", "mock");
  if (kind == "mock") {
    const std::uint64_t s =
        seed.has_value() ? *seed : section.value("seed", fallback_seed);
    const std::size_t dim = section.value("dim", std::size_t{64});
    return std::make_unique<MockEmbeddingProvider>(s, dim);
  }
  if (kind == "openai") {
    return make_http_embedding_provider(http_config(section, "embedding"));
  }
  raise(ErrorCode::InvalidArgument, "unknown embedding provider kind \"" + kind + "\"");
}

std::unique_ptr<CompletionProvider> completion_from_json(const json& section) {
  if (section.is_null()) return MockCompletionProvider::echo_last_line();
  const std::string kind = section.value("kind", "mock");
  if (kind == "mock") {
    const std::string mode = section.value("mode", "echo_last_line");
    if (mode == "echo_last_line") return MockCompletionProvider::echo_last_line();
    if (mode == "canned") {
      return MockCompletionProvider::canned(section.value("reply", std::string{}));
    }
    if (mode == "scripted") {
      std::vector<ScriptedReply> replies;
      if (section.contains("replies")) {
        for (const auto& r : section["replies"]) {
          replies.push_back(
              {r.at("match").get<std::string>(), r.at("reply").get<std::string>()});
        }
      }
      const std::string fallback = section.value("fallback", "echo_last_line");
      if (fallback == "echo_last_line") {
        return MockCompletionProvider::scripted(std::move(replies),
                                                MockCompletionProvider::Mode::EchoLastLine);
      }
      if (fallback == "canned") {
        return MockCompletionProvider::scripted(std::move(replies),
                                                MockCompletionProvider::Mode::Canned,
                                                section.value("fallback_reply", std::string{}));
      }
      raise(ErrorCode::InvalidArgument,
            "unknown scripted fallback \"" + fallback + "\"");
    }
    raise(ErrorCode::InvalidArgument, "unknown mock completion mode \"" + mode + "\"");
  }
  if (kind == "openai") {
    return make_http_completion_provider(http_config(section, "completion"));
  }
  raise(ErrorCode::InvalidArgument, "unknown completion provider kind \"" + kind + "\"");
}

}  // namespace

const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> table = {
      {"hotpotqa", {2, 3, 20, 0.1}},
      {"musique", {3, 3, 30, 0.1}},
      {"2wiki", {3, 3, 30, 0.1}},
      {"crud1", {1, 3, 10, 0.4}},
      {"crud2", {2, 3, 15, 0.3}},
  };
  return table;
}

Preset preset_by_name(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& [key, value] : presets()) {
      if (!known.empty()) known += ", ";
      known += key;
    }
    raise(ErrorCode::InvalidArgument,
          "unknown preset \"" + name + "\" (available: " + known + ")");
  }
  return it->second;
}

Providers make_mock_providers(std::uint64_t seed, std::size_t dim) {
  Providers p;
  p.embedding = std::make_unique<MockEmbeddingProvider>(seed, dim);
  p.completion = MockCompletionProvider::echo_last_line();
  return p;
}

Providers make_providers_from_json(const std::string& config_json,
                                   std::optional<std::uint64_t> seed_override) {
  json doc = json::parse(config_json, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(ErrorCode::Parse, "provider config is not a JSON object");
  }
  Providers p;
  p.embedding = embedding_from_json(doc.contains("embedding") ? doc["embedding"] : json{},
                                    seed_override, 0);
  p.completion = completion_from_json(doc.contains("completion") ? doc["completion"] : json{});
  return p;
}

Providers make_providers_from_file(const std::string& path,
                                   std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open provider config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::Io, "read failed for provider config " + path);
  try {
    return make_providers_from_json(text, seed_override);
  } catch (const Error& e) {
    raise(e.code(), path + ": " + e.what());
  }
}

BuildStats build_index_pipeline(const std::string& corpus_path, const std::string& out_dir,
                                std::uint64_t k, bool embed_title,
                                const std::string& template_language, Providers& providers,
                                const WarningSink& warn) {
  if (template_language != "english" && template_language != "chinese") {
    raise(ErrorCode::InvalidArgument,
          "unknown template language \"" + template_language + "\"");
  }
  const std::vector<Document> corpus = load_corpus(corpus_path);
  const PromptTemplate tmpl =
      template_language == "chinese" ? chinese_template() : english_template();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    raise(ErrorCode::Io, "cannot create index directory " + out_dir + ": " + ec.message());
  }

  BuildConfig cfg;
  cfg.k = k;
  cfg.embed_title = embed_title;
  cfg.cache_path = (std::filesystem::path(out_dir) / "extraction_cache.jsonl").string();
  cfg.warn = warn;

  const std::uint64_t embeds_before = providers.embedding->calls();
  const std::uint64_t completions_before = providers.completion->calls();
  BuildResult built =
      build_hig(corpus, *providers.embedding, *providers.completion, tmpl, cfg);
  save_index(built.graph, out_dir);

  BuildStats stats;
  stats.documents = built.graph.documents().size();
  for (const auto& edges : built.graph.doc_edges()) stats.edges += edges.size();
  stats.entities = built.graph.entities().size();
  stats.triples = built.graph.triples().size();
  stats.cache = built.cache;
  stats.embed_calls = providers.embedding->calls() - embeds_before;
  stats.completion_calls = providers.completion->calls() - completions_before;
  return stats;
}

AnswerResult answer_question(const std::string& question, const HierarchicalIndexGraph& graph,
                             const RetrievalParams& params, Providers& providers,
                             AnswerStyle style, const std::string& custom_template) {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t completions_before = providers.completion->calls();

  AnswerResult result;
  result.context = retrieve(question, graph, params, *providers.embedding);
  result.answer = generate_answer(question, result.context, *providers.completion, style,
                                  custom_template);

  const auto elapsed = std::chrono::steady_clock::now() - started;
  result.context.accounting.completion_calls =
      providers.completion->calls() - completions_before;
  result.context.accounting.wall_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
  return result;
}

void check_provider_identity(const HierarchicalIndexGraph& graph,
                             const EmbeddingProvider& embedder, const WarningSink& warn) {
  if (!warn) return;
  const std::string& built_with = graph.manifest().embedding_identity;
  const std::string current = embedder.identity();
  if (built_with != current) {
    warn("index was built with embedding provider \"" + built_with +
         "\" but queries use \"" + current + "\"; similarities may be meaningless");
  }
}

std::string build_stats_to_json(const BuildStats& stats, int indent) {
  ordered_json doc = {{"documents", stats.documents},
                      {"edges", stats.edges},
                      {"entities", stats.entities},
                      {"triples", stats.triples},
                      {"cache", {{"hits", stats.cache.hits}, {"misses", stats.cache.misses}}},
                      {"accounting",
                       {{"embed_calls", stats.embed_calls},
                        {"completion_calls", stats.completion_calls}}}};
  return doc.dump(indent);
}

}  // namespace kgrag
