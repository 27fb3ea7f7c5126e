#include "kgrag.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/engine.hpp"
#include "kgrag/error.hpp"
#include "kgrag/evaluation.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/hig.hpp"
#include "kgrag/retrieval.hpp"

struct kgrag_index {
  kgrag::HierarchicalIndexGraph graph;
};

struct kgrag_providers {
  kgrag::Providers providers;
};

namespace {

thread_local std::string g_last_error;

kgrag_status_t to_status(kgrag::ErrorCode code) {
  using kgrag::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return KGRAG_INVALID_ARGUMENT;
    case ErrorCode::Io: return KGRAG_IO;
    case ErrorCode::Parse: return KGRAG_PARSE;
    case ErrorCode::Provider: return KGRAG_PROVIDER;
    case ErrorCode::VersionMismatch: return KGRAG_VERSION_MISMATCH;
    case ErrorCode::Corrupt: return KGRAG_CORRUPT;
    case ErrorCode::Internal: return KGRAG_INTERNAL;
  }
  return KGRAG_INTERNAL;
}

kgrag_status_t fail(kgrag_status_t status, const std::string& message) {
  g_last_error = message;
  return status;
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out != nullptr) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

kgrag_status_t set_out(char** slot, const std::string& text) {
  if (slot == nullptr) return KGRAG_OK;
  *slot = dup_string(text);
  if (*slot == nullptr) return fail(KGRAG_INTERNAL, "out of memory");
  return KGRAG_OK;
}

template <typename Fn>
kgrag_status_t guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const kgrag::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(KGRAG_INTERNAL, e.what());
  } catch (...) {
    return fail(KGRAG_INTERNAL, "unknown failure");
  }
}

kgrag_status_t require(bool ok, const char* what) {
  if (ok) return KGRAG_OK;
  return fail(KGRAG_INVALID_ARGUMENT, std::string(what) + " must not be NULL");
}

kgrag::RetrievalParams params_from_json(const char* params_json) {
  kgrag::RetrievalParams params;
  if (params_json == nullptr || *params_json == '\0') return params;
  const nlohmann::json doc = nlohmann::json::parse(params_json, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    kgrag::raise(kgrag::ErrorCode::Parse, "params is not a JSON object");
  }
  try {
    if (doc.contains("n")) params.n = doc["n"].get<std::uint64_t>();
    if (doc.contains("t")) params.t = doc["t"].get<std::uint64_t>();
    if (doc.contains("lambda")) params.lambda = doc["lambda"].get<double>();
    if (doc.contains("strategy")) {
      params.strategy.kind = kgrag::strategy_from_name(doc["strategy"].get<std::string>());
    }
    if (doc.contains("hops")) params.strategy.hops = doc["hops"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    kgrag::raise(kgrag::ErrorCode::Parse, std::string("malformed params: ") + e.what());
  }
  params.validate();
  return params;
}

void stderr_warn(const std::string& message) {
  std::fprintf(stderr, "warning: %s\n", message.c_str());
}

}  // namespace

extern "C" {

const char* kgrag_version(void) { return "1.0.0"; }

const char* kgrag_last_error(void) { return g_last_error.c_str(); }

void kgrag_string_free(char* s) { std::free(s); }

kgrag_status_t kgrag_providers_create_mock(uint64_t seed, kgrag_providers_t** out) {
  if (auto bad = require(out != nullptr, "out")) return bad;
  return guarded([&] {
    auto handle = std::make_unique<kgrag_providers>();
    handle->providers = kgrag::make_mock_providers(seed);
    *out = handle.release();
    return KGRAG_OK;
  });
}

kgrag_status_t kgrag_providers_create_from_config(const char* config_json,
                                                  int has_seed_override,
                                                  uint64_t seed_override,
                                                  kgrag_providers_t** out) {
  if (auto bad = require(out != nullptr, "out")) return bad;
  if (auto bad = require(config_json != nullptr, "config_json")) return bad;
  return guarded([&] {
    std::optional<std::uint64_t> seed;
    if (has_seed_override != 0) seed = seed_override;
    auto handle = std::make_unique<kgrag_providers>();
    handle->providers = kgrag::make_providers_from_json(config_json, seed);
    *out = handle.release();
    return KGRAG_OK;
  });
}

void kgrag_providers_destroy(kgrag_providers_t* providers) { delete providers; }

kgrag_status_t kgrag_index_build(const char* corpus_path, const char* out_dir, uint64_t k,
                                 int embed_title, const char* template_language,
                                 kgrag_providers_t* providers, char** out_stats_json) {
  if (auto bad = require(corpus_path != nullptr, "corpus_path")) return bad;
  if (auto bad = require(out_dir != nullptr, "out_dir")) return bad;
  if (auto bad = require(providers != nullptr, "providers")) return bad;
  return guarded([&] {
    const std::string language =
        template_language != nullptr && *template_language != '\0' ? template_language
                                                                   : "english";
    const kgrag::BuildStats stats =
        kgrag::build_index_pipeline(corpus_path, out_dir, k, embed_title != 0, language,
                                    providers->providers, stderr_warn);
    return set_out(out_stats_json, kgrag::build_stats_to_json(stats));
  });
}

kgrag_status_t kgrag_index_load(const char* dir, kgrag_index_t** out) {
  if (auto bad = require(dir != nullptr, "dir")) return bad;
  if (auto bad = require(out != nullptr, "out")) return bad;
  return guarded([&] {
    auto handle = std::make_unique<kgrag_index>(kgrag_index{kgrag::load_index(dir)});
    *out = handle.release();
    return KGRAG_OK;
  });
}

void kgrag_index_destroy(kgrag_index_t* index) { delete index; }

kgrag_status_t kgrag_index_stats(const kgrag_index_t* index, char** out_json) {
  if (auto bad = require(index != nullptr, "index")) return bad;
  if (auto bad = require(out_json != nullptr, "out_json")) return bad;
  return guarded([&] {
    const kgrag::IndexManifest& m = index->graph.manifest();
    std::uint64_t edges = 0;
    for (const auto& list : index->graph.doc_edges()) edges += list.size();
    nlohmann::ordered_json doc = {{"version", m.version},
                                  {"k", m.k},
                                  {"embedding_identity", m.embedding_identity},
                                  {"dimension", m.dimension},
                                  {"document_count", m.document_count},
                                  {"entity_count", m.entity_count},
                                  {"triple_count", m.triple_count},
                                  {"edge_count", edges}};
    return set_out(out_json, doc.dump());
  });
}

kgrag_status_t kgrag_query(const kgrag_index_t* index, kgrag_providers_t* providers,
                           const char* question, const char* params_json,
                           char** out_context_json) {
  if (auto bad = require(index != nullptr, "index")) return bad;
  if (auto bad = require(providers != nullptr, "providers")) return bad;
  if (auto bad = require(question != nullptr, "question")) return bad;
  return guarded([&] {
    const kgrag::RetrievalParams params = params_from_json(params_json);
    kgrag::check_provider_identity(index->graph, *providers->providers.embedding,
                                   stderr_warn);
    const kgrag::RetrievedContext context =
        kgrag::retrieve(question, index->graph, params, *providers->providers.embedding);
    return set_out(out_context_json, kgrag::context_to_json(context, index->graph));
  });
}

kgrag_status_t kgrag_generate(const kgrag_index_t* index, kgrag_providers_t* providers,
                              const char* question, const char* params_json,
                              const char* style, const char* prompt_template,
                              char** out_context_json, char** out_answer) {
  if (auto bad = require(index != nullptr, "index")) return bad;
  if (auto bad = require(providers != nullptr, "providers")) return bad;
  if (auto bad = require(question != nullptr, "question")) return bad;
  return guarded([&] {
    const kgrag::RetrievalParams params = params_from_json(params_json);
    const kgrag::AnswerStyle answer_style = kgrag::answer_style_from_name(
        style != nullptr && *style != '\0' ? style : "short");
    kgrag::check_provider_identity(index->graph, *providers->providers.embedding,
                                   stderr_warn);
    const kgrag::AnswerResult result = kgrag::answer_question(
        question, index->graph, params, providers->providers, answer_style,
        prompt_template != nullptr ? prompt_template : "");
    if (auto bad = set_out(out_context_json, kgrag::context_to_json(result.context,
                                                                    index->graph))) {
      return bad;
    }
    return set_out(out_answer, result.answer);
  });
}

kgrag_status_t kgrag_eval(const kgrag_index_t* index, kgrag_providers_t* providers,
                          const char* qa_path, const char* params_json, const char* style,
                          char** out_report_json) {
  if (auto bad = require(index != nullptr, "index")) return bad;
  if (auto bad = require(providers != nullptr, "providers")) return bad;
  if (auto bad = require(qa_path != nullptr, "qa_path")) return bad;
  return guarded([&] {
    const kgrag::RetrievalParams params = params_from_json(params_json);
    const kgrag::AnswerStyle answer_style = kgrag::answer_style_from_name(
        style != nullptr && *style != '\0' ? style : "short");
    kgrag::check_provider_identity(index->graph, *providers->providers.embedding,
                                   stderr_warn);
    const std::vector<kgrag::QAItem> items = kgrag::load_qa(qa_path);
    const kgrag::EvalReport report = kgrag::run_benchmark(
        items, index->graph, params, *providers->providers.embedding,
        *providers->providers.completion, answer_style, "", stderr_warn);
    return set_out(out_report_json, kgrag::report_to_json(report));
  });
}

kgrag_status_t kgrag_render_report_table(const char* report_json, char** out_table) {
  if (auto bad = require(report_json != nullptr, "report_json")) return bad;
  if (auto bad = require(out_table != nullptr, "out_table")) return bad;
  return guarded([&] {
    const kgrag::EvalReport report = kgrag::report_from_json(report_json);
    return set_out(out_table, kgrag::render_report_table(report));
  });
}

}  // extern "C"
