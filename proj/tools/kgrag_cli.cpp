// Command-line front end over the kgrag shared library: build an index from
// a JSONL corpus, run single-pass queries against it, and score QA datasets.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgrag.h"

namespace {

using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

[[noreturn]] void die(kgrag_status_t status) {
  std::cerr << "error: " << kgrag_last_error() << "\n";
  std::exit(status == KGRAG_INVALID_ARGUMENT ? kExitUsage : kExitRuntime);
}

void check(kgrag_status_t status) {
  if (status != KGRAG_OK) die(status);
}

// owned C string that frees itself
struct OutString {
  char* value = nullptr;
  ~OutString() { kgrag_string_free(value); }
  std::string str() const { return value != nullptr ? value : ""; }
};

std::string read_text_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << what << " " << path << "\n";
    std::exit(kExitRuntime);
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Params {
  std::uint64_t k = 2;
  std::uint64_t n = 3;
  std::uint64_t t = 20;
  double lambda = 0.1;
  std::string strategy = "one-hop";
  std::uint64_t hops = 2;
  std::string style = "short";
  std::string template_language = "english";
};

struct PresetValues {
  std::uint64_t k, n, t;
  double lambda;
};

std::optional<PresetValues> preset_values(const std::string& name) {
  if (name == "hotpotqa") return PresetValues{2, 3, 20, 0.1};
  if (name == "musique") return PresetValues{3, 3, 30, 0.1};
  if (name == "2wiki") return PresetValues{3, 3, 30, 0.1};
  if (name == "crud1") return PresetValues{1, 3, 10, 0.4};
  if (name == "crud2") return PresetValues{2, 3, 15, 0.3};
  return std::nullopt;
}

// precedence: explicit flag > config file > preset > built-in default
struct ParamSources {
  CLI::Option* k = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* t = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* strategy = nullptr;
  CLI::Option* hops = nullptr;
  CLI::Option* style = nullptr;
  CLI::Option* template_language = nullptr;
  std::string config_path;
  std::string preset;

  void resolve(Params& params) const {
    Params flags = params;  // parsed flag values, kept aside
    params = Params{};

    if (const auto preset_vals = preset_values(preset); preset_vals.has_value()) {
      params.k = preset_vals->k;
      params.n = preset_vals->n;
      params.t = preset_vals->t;
      params.lambda = preset_vals->lambda;
    } else if (!preset.empty()) {
      std::cerr << "error: unknown preset \"" << preset << "\"\n";
      std::exit(kExitUsage);
    }

    if (!config_path.empty()) {
      const std::string text = read_text_file(config_path, "config");
      const json doc = json::parse(text, nullptr, false);
      if (doc.is_discarded() || !doc.is_object()) {
        std::cerr << "error: " << config_path << " is not a JSON object\n";
        std::exit(kExitUsage);
      }
      for (const auto& [key, value] : doc.items()) {
        try {
          if (key == "k") params.k = value.get<std::uint64_t>();
          else if (key == "n") params.n = value.get<std::uint64_t>();
          else if (key == "t") params.t = value.get<std::uint64_t>();
          else if (key == "lambda") params.lambda = value.get<double>();
          else if (key == "strategy") params.strategy = value.get<std::string>();
          else if (key == "hops") params.hops = value.get<std::uint64_t>();
          else if (key == "style") params.style = value.get<std::string>();
          else if (key == "template") params.template_language = value.get<std::string>();
          else {
            std::cerr << "error: unknown key \"" << key << "\" in " << config_path << "\n";
            std::exit(kExitUsage);
          }
        } catch (const json::exception& e) {
          std::cerr << "error: bad value for \"" << key << "\" in " << config_path << ": "
                    << e.what() << "\n";
          std::exit(kExitUsage);
        }
      }
    }

    if (k != nullptr && k->count() > 0) params.k = flags.k;
    if (n != nullptr && n->count() > 0) params.n = flags.n;
    if (t != nullptr && t->count() > 0) params.t = flags.t;
    if (lambda != nullptr && lambda->count() > 0) params.lambda = flags.lambda;
    if (strategy != nullptr && strategy->count() > 0) params.strategy = flags.strategy;
    if (hops != nullptr && hops->count() > 0) params.hops = flags.hops;
    if (style != nullptr && style->count() > 0) params.style = flags.style;
    if (template_language != nullptr && template_language->count() > 0) {
      params.template_language = flags.template_language;
    }
  }
};

std::string params_json(const Params& params) {
  return json{{"n", params.n},
              {"t", params.t},
              {"lambda", params.lambda},
              {"strategy", params.strategy},
              {"hops", params.hops}}
      .dump();
}

kgrag_providers_t* make_providers(const std::string& provider_config_path, bool seed_given,
                                  std::uint64_t seed) {
  kgrag_providers_t* providers = nullptr;
  if (provider_config_path.empty()) {
    check(kgrag_providers_create_mock(seed, &providers));
  } else {
    const std::string text = read_text_file(provider_config_path, "provider config");
    check(kgrag_providers_create_from_config(text.c_str(), seed_given ? 1 : 0, seed,
                                             &providers));
  }
  return providers;
}

struct CommonFlags {
  std::string provider_config;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string config_path;
  std::string preset;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--provider-config", provider_config,
                   "JSON file configuring embedding/completion providers "
                   "(default: seeded offline mocks)");
    seed_opt = cmd.add_option("--seed", seed, "Seed for the mock embedding provider")
                   ->capture_default_str();
    cmd.add_option("--config", config_path, "JSON file with parameter overrides");
    cmd.add_option("--preset", preset,
                   "Named hyperparameter profile: hotpotqa {k=2 n=3 t=20 lambda=0.1}, "
                   "musique {3 3 30 0.1}, 2wiki {3 3 30 0.1}, crud1 {1 3 10 0.4}, "
                   "crud2 {2 3 15 0.3}")
        ->check(CLI::IsMember({"hotpotqa", "musique", "2wiki", "crud1", "crud2"}));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-indexed retrieval: two-layer document/knowledge-graph "
               "indexing, single-pass retrieval, answer generation, QA scoring"};
  app.require_subcommand(1);

  Params params;

  const auto add_retrieval_flags = [&params](CLI::App& cmd, ParamSources& sources) {
    sources.n = cmd.add_option("--n", params.n, "Seed documents")->capture_default_str();
    sources.t =
        cmd.add_option("--t", params.t, "Max retrieved triples")->capture_default_str();
    sources.lambda =
        cmd.add_option("--lambda", params.lambda, "Score threshold")->capture_default_str();
    sources.strategy =
        cmd.add_option("--strategy", params.strategy, "Candidate expansion strategy")
            ->check(CLI::IsMember({"one-hop", "attentive", "multi-hop"}))
            ->capture_default_str();
    sources.hops =
        cmd.add_option("--hops", params.hops, "Hop limit for multi-hop")
            ->capture_default_str();
    sources.style = cmd.add_option("--style", params.style, "Answer style")
                        ->check(CLI::IsMember({"short", "long"}))
                        ->capture_default_str();
  };

  // ---- build-index ----------------------------------------------------
  auto* build = app.add_subcommand("build-index", "Index a JSONL corpus into a directory");
  std::string corpus_path;
  std::string out_dir;
  bool embed_title = false;
  ParamSources build_sources;
  CommonFlags build_common;
  build->add_option("--corpus", corpus_path, "Corpus JSONL ({\"id\",\"text\",\"title\"?})")
      ->required();
  build->add_option("--out", out_dir, "Directory to write the index into")->required();
  build_sources.k =
      build->add_option("--k", params.k, "Similar-document neighbors per document")
          ->capture_default_str();
  build->add_flag("--embed-title", embed_title, "Prepend titles to the embedded text");
  build_sources.template_language =
      build
          ->add_option("--template", params.template_language,
                       "Triple-extraction prompt language")
          ->check(CLI::IsMember({"english", "chinese"}))
          ->capture_default_str();
  build_common.add_to(*build);

  // ---- query -----------------------------------------------------------
  auto* query = app.add_subcommand("query", "Retrieve context (and optionally answer)");
  std::string index_dir;
  std::string question;
  bool generate = false;
  std::string prompt_template_path;
  ParamSources query_sources;
  CommonFlags query_common;
  query->add_option("--index", index_dir, "Index directory")->required();
  query->add_option("question", question, "Question text")->required();
  add_retrieval_flags(*query, query_sources);
  query->add_flag("--generate", generate, "Also generate an answer");
  query->add_option("--prompt-template", prompt_template_path,
                    "Answer prompt template file ({{triples}}, {{question}})");
  query_common.add_to(*query);

  // ---- eval ------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Score a QA dataset against an index");
  std::string qa_path;
  std::string report_path;
  ParamSources eval_sources;
  CommonFlags eval_common;
  eval->add_option("--index", index_dir, "Index directory")->required();
  eval->add_option("--qa", qa_path, "QA JSONL ({\"id\",\"question\",\"answers\"})")
      ->required();
  eval->add_option("--report", report_path,
                   "Write the report JSON here instead of stdout");
  add_retrieval_flags(*eval, eval_sources);
  eval_common.add_to(*eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return kExitUsage;
  }

  if (build->parsed()) {
    build_sources.config_path = build_common.config_path;
    build_sources.preset = build_common.preset;
    build_sources.resolve(params);
    kgrag_providers_t* providers = make_providers(
        build_common.provider_config, build_common.seed_opt->count() > 0, build_common.seed);
    OutString stats;
    const kgrag_status_t status =
        kgrag_index_build(corpus_path.c_str(), out_dir.c_str(), params.k,
                          embed_title ? 1 : 0, params.template_language.c_str(), providers,
                          &stats.value);
    if (status != KGRAG_OK) {
      kgrag_providers_destroy(providers);
      die(status);
    }
    const json doc = json::parse(stats.str());
    std::cout << "index written to " << out_dir << "\n";
    std::cout << "documents: " << doc["documents"] << "\n";
    std::cout << "edges: " << doc["edges"] << "\n";
    std::cout << "entities: " << doc["entities"] << "\n";
    std::cout << "triples: " << doc["triples"] << "\n";
    std::cout << "extraction cache: " << doc["cache"]["hits"] << " hit(s), "
              << doc["cache"]["misses"] << " miss(es)\n";
    std::cout << "provider calls: " << doc["accounting"]["embed_calls"] << " embedding, "
              << doc["accounting"]["completion_calls"] << " completion\n";
    kgrag_providers_destroy(providers);
    return 0;
  }

  const auto with_index_and_providers = [&](const CommonFlags& common, auto&& body) {
    kgrag_index_t* index = nullptr;
    check(kgrag_index_load(index_dir.c_str(), &index));
    kgrag_providers_t* providers =
        make_providers(common.provider_config, common.seed_opt->count() > 0, common.seed);
    const kgrag_status_t status = body(index, providers);
    kgrag_providers_destroy(providers);
    kgrag_index_destroy(index);
    if (status != KGRAG_OK) die(status);
  };

  if (query->parsed()) {
    query_sources.config_path = query_common.config_path;
    query_sources.preset = query_common.preset;
    query_sources.resolve(params);
    const std::string pjson = params_json(params);
    std::string prompt_template;
    if (!prompt_template_path.empty()) {
      prompt_template = read_text_file(prompt_template_path, "prompt template");
    }
    with_index_and_providers(query_common, [&](kgrag_index_t* index,
                                               kgrag_providers_t* providers) {
      OutString context;
      if (generate) {
        OutString answer;
        const kgrag_status_t status = kgrag_generate(
            index, providers, question.c_str(), pjson.c_str(), params.style.c_str(),
            prompt_template.empty() ? nullptr : prompt_template.c_str(), &context.value,
            &answer.value);
        if (status != KGRAG_OK) return status;
        std::cout << context.str() << "\n" << answer.str() << "\n";
        return KGRAG_OK;
      }
      const kgrag_status_t status =
          kgrag_query(index, providers, question.c_str(), pjson.c_str(), &context.value);
      if (status != KGRAG_OK) return status;
      std::cout << context.str() << "\n";
      return KGRAG_OK;
    });
    return 0;
  }

  // eval
  eval_sources.config_path = eval_common.config_path;
  eval_sources.preset = eval_common.preset;
  eval_sources.resolve(params);
  const std::string pjson = params_json(params);
  with_index_and_providers(eval_common, [&](kgrag_index_t* index,
                                            kgrag_providers_t* providers) {
    OutString report;
    const kgrag_status_t status = kgrag_eval(index, providers, qa_path.c_str(),
                                             pjson.c_str(), params.style.c_str(),
                                             &report.value);
    if (status != KGRAG_OK) return status;
    OutString table;
    const kgrag_status_t render = kgrag_render_report_table(report.value, &table.value);
    if (render != KGRAG_OK) return render;
    if (report_path.empty()) {
      std::cout << report.str() << "\n";
    } else {
      std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
      if (!out) {
        std::cerr << "error: cannot write report to " << report_path << "\n";
        std::exit(kExitRuntime);
      }
      out << report.str() << "\n";
    }
    std::cout << table.str();
    return KGRAG_OK;
  });
  return 0;
}
