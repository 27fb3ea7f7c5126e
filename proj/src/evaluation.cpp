#include "kgrag/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {
namespace {

bool ascii_punct(char c) {
  static const std::string punct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  return punct.find(c) != std::string::npos;
}

std::string em_normalize(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    if (ascii_punct(c)) continue;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    lowered.push_back(c);
  }
  std::string out;
  for (const std::string& tok : whitespace_tokens(lowered)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                 tokens.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
  }
  return out;
}

std::size_t lcs_len(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

int exact_match(const std::string& pred, const std::vector<std::string>& gold_answers) {
  const std::string p = em_normalize(pred);
  for (const std::string& g : gold_answers) {
    if (p == em_normalize(g)) return 1;
  }
  return 0;
}

double bleu(const std::string& pred, const std::vector<std::string>& refs) {
  const std::vector<std::string> ptoks = metric_tokens(pred);
  std::vector<std::vector<std::string>> rtoks;
  rtoks.reserve(refs.size());
  for (const std::string& r : refs) rtoks.push_back(metric_tokens(r));

  if (ptoks.empty()) {
    if (rtoks.empty()) return 0.0;
    return std::all_of(rtoks.begin(), rtoks.end(),
                       [](const auto& r) { return r.empty(); })
               ? 1.0
               : 0.0;
  }
  if (rtoks.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts pc = ngram_counts(ptoks, n);
    std::vector<NgramCounts> rcs;
    rcs.reserve(rtoks.size());
    for (const auto& r : rtoks) rcs.push_back(ngram_counts(r, n));

    const std::size_t den = ptoks.size() >= n ? ptoks.size() - n + 1 : 0;
    std::size_t num = 0;
    for (const auto& [gram, count] : pc) {
      std::size_t best = 0;
      for (const auto& rc : rcs) {
        const auto it = rc.find(gram);
        if (it != rc.end()) best = std::max(best, it->second);
      }
      num += std::min(count, best);
    }
    const double p = num == 0 ? 1.0 / static_cast<double>(den + 1)
                              : static_cast<double>(num) / static_cast<double>(den);
    log_sum += std::log(p);
  }
  const double geo = std::exp(log_sum / 4.0);

  const double c = static_cast<double>(ptoks.size());
  std::size_t r_len = rtoks.front().size();
  for (const auto& r : rtoks) {
    const double cur = std::abs(static_cast<double>(r.size()) - c);
    const double best = std::abs(static_cast<double>(r_len) - c);
    if (cur < best || (cur == best && r.size() < r_len)) r_len = r.size();
  }
  const double r = static_cast<double>(r_len);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * geo;
}

double rouge_l(const std::string& pred, const std::string& ref) {
  const std::vector<std::string> p = metric_tokens(pred);
  const std::vector<std::string> r = metric_tokens(ref);
  if (p.empty() || r.empty()) return 0.0;
  const std::size_t l = lcs_len(p, r);
  if (l == 0) return 0.0;
  const double prec = static_cast<double>(l) / static_cast<double>(p.size());
  const double rec = static_cast<double>(l) / static_cast<double>(r.size());
  return 2.0 * prec * rec / (prec + rec);
}

double rouge_l(const std::string& pred, const std::vector<std::string>& refs) {
  double best = 0.0;
  for (const std::string& r : refs) best = std::max(best, rouge_l(pred, r));
  return best;
}

EvalReport run_benchmark(const std::vector<QAItem>& items, const HierarchicalIndexGraph& graph,
                         const RetrievalParams& params, EmbeddingProvider& embedder,
                         CompletionProvider& completer, AnswerStyle style,
                         const std::string& custom_template, const WarningSink& warn) {
  if (items.empty()) raise(ErrorCode::InvalidArgument, "benchmark needs at least one item");
  params.validate();

  EvalReport report;
  for (const QAItem& item : items) {
    EvalItem row;
    row.id = item.id;
    const auto started = std::chrono::steady_clock::now();
    try {
      RetrievedContext context = retrieve(item.question, graph, params, embedder);
      row.prediction =
          generate_answer(item.question, context, completer, style, custom_template);
      report.accounting.embed_calls += context.accounting.embed_calls;
      report.accounting.completion_calls += 1;
    } catch (const Error& e) {
      ++report.failed_count;
      if (warn) warn("item \"" + item.id + "\" failed: " + e.what());
      continue;
    }
    const auto elapsed = std::chrono::steady_clock::now() - started;
    row.wall_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());

    if (item.gold_answers.empty()) {
      if (warn) warn("item \"" + item.id + "\" has no gold answers; scoring 0");
    }
    row.em = exact_match(row.prediction, item.gold_answers);
    row.bleu = bleu(row.prediction, item.gold_answers);
    row.rouge_l = rouge_l(row.prediction, item.gold_answers);
    report.accounting.wall_ms += row.wall_ms;
    report.items.push_back(std::move(row));
  }

  if (!report.items.empty()) {
    const double count = static_cast<double>(report.items.size());
    for (const EvalItem& row : report.items) {
      report.aggregates.em += row.em;
      report.aggregates.bleu += row.bleu;
      report.aggregates.rouge_l += row.rouge_l;
      report.aggregates.mean_wall_ms += static_cast<double>(row.wall_ms);
    }
    report.aggregates.em /= count;
    report.aggregates.bleu /= count;
    report.aggregates.rouge_l /= count;
    report.aggregates.mean_wall_ms /= count;
  }
  return report;
}

std::string report_to_json(const EvalReport& report, int indent) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json items = ordered_json::array();
  for (const EvalItem& row : report.items) {
    items.push_back({{"id", row.id},
                     {"prediction", row.prediction},
                     {"em", row.em},
                     {"bleu", row.bleu},
                     {"rouge_l", row.rouge_l},
                     {"wall_ms", row.wall_ms}});
  }
  ordered_json doc = {{"items", std::move(items)},
                      {"aggregates",
                       {{"em", report.aggregates.em},
                        {"bleu", report.aggregates.bleu},
                        {"rouge_l", report.aggregates.rouge_l},
                        {"mean_wall_ms", report.aggregates.mean_wall_ms}}},
                      {"failed_count", report.failed_count},
                      {"accounting",
                       {{"embed_calls", report.accounting.embed_calls},
                        {"completion_calls", report.accounting.completion_calls},
                        {"wall_ms", report.accounting.wall_ms}}}};
  return doc.dump(indent);
}

EvalReport report_from_json(const std::string& json_text) {
  using ordered_json = nlohmann::ordered_json;
  const ordered_json doc = ordered_json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(ErrorCode::Parse, "report is not a JSON object");
  }
  EvalReport report;
  try {
    for (const auto& item : doc.at("items")) {
      EvalItem row;
      row.id = item.at("id").get<std::string>();
      row.prediction = item.at("prediction").get<std::string>();
      row.em = item.at("em").get<int>();
      row.bleu = item.at("bleu").get<double>();
      row.rouge_l = item.at("rouge_l").get<double>();
      row.wall_ms = item.at("wall_ms").get<std::uint64_t>();
      report.items.push_back(std::move(row));
    }
    const auto& agg = doc.at("aggregates");
    report.aggregates.em = agg.at("em").get<double>();
    report.aggregates.bleu = agg.at("bleu").get<double>();
    report.aggregates.rouge_l = agg.at("rouge_l").get<double>();
    report.aggregates.mean_wall_ms = agg.at("mean_wall_ms").get<double>();
    report.failed_count = doc.at("failed_count").get<std::uint64_t>();
    const auto& acc = doc.at("accounting");
    report.accounting.embed_calls = acc.at("embed_calls").get<std::uint64_t>();
    report.accounting.completion_calls = acc.at("completion_calls").get<std::uint64_t>();
    report.accounting.wall_ms = acc.at("wall_ms").get<std::uint64_t>();
  } catch (const ordered_json::exception& e) {
    raise(ErrorCode::Parse, std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string render_report_table(const EvalReport& report) {
  std::size_t id_width = 4;
  for (const EvalItem& row : report.items) id_width = std::max(id_width, row.id.size());

  const auto line = [&](const std::string& id, const std::string& em, const std::string& b,
                        const std::string& r, const std::string& ms) {
    std::string out = id;
    out.append(id_width - id.size() + 2, ' ');
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%6s  %8s  %8s  %8s", em.c_str(), b.c_str(), r.c_str(),
                  ms.c_str());
    out += buf;
    out.push_back('\n');
    return out;
  };
  const auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };

  std::string out = line("id", "em", "bleu", "rouge_l", "wall_ms");
  for (const EvalItem& row : report.items) {
    out += line(row.id, std::to_string(row.em), fmt(row.bleu), fmt(row.rouge_l),
                std::to_string(row.wall_ms));
  }
  out += line("mean", fmt(report.aggregates.em), fmt(report.aggregates.bleu),
              fmt(report.aggregates.rouge_l), fmt(report.aggregates.mean_wall_ms));
  if (report.failed_count > 0) {
    out += "failed items: " + std::to_string(report.failed_count) + "\n";
  }
  return out;
}

}  // namespace kgrag
