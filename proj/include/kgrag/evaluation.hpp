#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgrag/corpus.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/hig.hpp"
#include "kgrag/providers.hpp"
#include "kgrag/retrieval.hpp"

namespace kgrag {

/// 1 iff the prediction equals any gold answer after lowercasing (ASCII),
/// stripping ASCII punctuation, dropping the article tokens a/an/the, and
/// collapsing whitespace.
int exact_match(const std::string& pred, const std::vector<std::string>& gold_answers);

/// Sentence BLEU, n-grams 1..4, multi-reference clipping, brevity penalty
/// against the closest reference length (ties toward the shorter). A zero
/// n-gram count is smoothed to 1/(denominator+1); nonzero counts are exact.
/// Tokens are whitespace-split when the text contains whitespace, otherwise
/// single code points. Empty prediction: 1 when every reference is empty too,
/// else 0. No references: 0.
double bleu(const std::string& pred, const std::vector<std::string>& refs);

/// LCS F1 over tokens (same tokenization as bleu): P = LCS/|pred|,
/// R = LCS/|ref|. Multi-reference takes the maximum. 0 when either side is
/// empty or nothing is common.
double rouge_l(const std::string& pred, const std::string& ref);
double rouge_l(const std::string& pred, const std::vector<std::string>& refs);

struct EvalItem {
  std::string id;
  std::string prediction;
  int em = 0;
  double bleu = 0.0;
  double rouge_l = 0.0;
  std::uint64_t wall_ms = 0;
};

struct EvalAggregates {
  double em = 0.0;
  double bleu = 0.0;
  double rouge_l = 0.0;
  double mean_wall_ms = 0.0;
};

struct EvalReport {
  std::vector<EvalItem> items;  // successfully scored items, input order
  EvalAggregates aggregates;    // arithmetic means over items
  std::uint64_t failed_count = 0;
  Accounting accounting;  // totals across scored items
};

/// retrieve -> generate -> score for each item, sequentially. Items whose
/// retrieval or generation raises are skipped, counted in failed_count, and
/// reported through `warn`; items with no gold answers score 0 and are
/// flagged the same way.
EvalReport run_benchmark(const std::vector<QAItem>& items, const HierarchicalIndexGraph& graph,
                         const RetrievalParams& params, EmbeddingProvider& embedder,
                         CompletionProvider& completer, AnswerStyle style,
                         const std::string& custom_template = "",
                         const WarningSink& warn = nullptr);

std::string report_to_json(const EvalReport& report, int indent = -1);
EvalReport report_from_json(const std::string& json_text);
std::string render_report_table(const EvalReport& report);

}  // namespace kgrag
