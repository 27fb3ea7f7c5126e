#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "kgrag/evaluation.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/hig.hpp"
#include "kgrag/kg_extraction.hpp"
#include "kgrag/providers.hpp"
#include "kgrag/retrieval.hpp"

namespace kgrag {

struct Preset {
  std::uint64_t k = 2;
  std::uint64_t n = 3;
  std::uint64_t t = 20;
  double lambda = 0.1;
};

/// Named hyperparameter profiles: hotpotqa, musique, 2wiki, crud1, crud2.
const std::map<std::string, Preset>& presets();
Preset preset_by_name(const std::string& name);

struct Providers {
  std::unique_ptr<EmbeddingProvider> embedding;
  std::unique_ptr<CompletionProvider> completion;
};

Providers make_mock_providers(std::uint64_t seed, std::size_t dim = 64);

/// Provider config document:
///   {"embedding": {"kind": "mock", "dim": 64, "seed": 0} |
///                 {"kind": "openai", "base_url", "model", "api_key_env", ...},
///    "completion": {"kind": "mock", "mode": "echo_last_line" | "canned" | "scripted",
///                   "reply", "replies": [{"match", "reply"}], "fallback"} |
///                  {"kind": "openai", ...}}
/// Missing sections fall back to the seeded mocks. `seed_override` (the CLI
/// --seed) beats a "seed" in the document.
Providers make_providers_from_json(const std::string& config_json,
                                   std::optional<std::uint64_t> seed_override);
Providers make_providers_from_file(const std::string& path,
                                   std::optional<std::uint64_t> seed_override);

struct BuildStats {
  std::uint64_t documents = 0;
  std::uint64_t edges = 0;
  std::uint64_t entities = 0;
  std::uint64_t triples = 0;
  CacheStats cache;
  std::uint64_t embed_calls = 0;
  std::uint64_t completion_calls = 0;
};

/// Load corpus -> build both index layers (extraction cache lives inside
/// out_dir) -> persist to out_dir.
BuildStats build_index_pipeline(const std::string& corpus_path, const std::string& out_dir,
                                std::uint64_t k, bool embed_title,
                                const std::string& template_language, Providers& providers,
                                const WarningSink& warn = nullptr);

struct AnswerResult {
  RetrievedContext context;  // accounting covers retrieval plus generation
  std::string answer;
};

AnswerResult answer_question(const std::string& question, const HierarchicalIndexGraph& graph,
                             const RetrievalParams& params, Providers& providers,
                             AnswerStyle style, const std::string& custom_template = "");

/// Emits a warning when the embedder answering queries is not the one the
/// index was built with.
void check_provider_identity(const HierarchicalIndexGraph& graph,
                             const EmbeddingProvider& embedder, const WarningSink& warn);

std::string build_stats_to_json(const BuildStats& stats, int indent = -1);

}  // namespace kgrag
