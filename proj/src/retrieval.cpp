#include "kgrag/retrieval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>

#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

void Strategy::validate() const {
  if (kind == StrategyKind::MultiHop && hops < 2) {
    raise(ErrorCode::InvalidArgument, "multi-hop strategy needs hops >= 2");
  }
}

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "one-hop") return StrategyKind::OneHop;
  if (name == "attentive") return StrategyKind::Attentive;
  if (name == "multi-hop") return StrategyKind::MultiHop;
  raise(ErrorCode::InvalidArgument,
        "unknown strategy \"" + name + "\" (expected one-hop, attentive or multi-hop)");
}

std::string strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::OneHop: return "one-hop";
    case StrategyKind::Attentive: return "attentive";
    case StrategyKind::MultiHop: return "multi-hop";
  }
  raise(ErrorCode::Internal, "unhandled strategy kind");
}

void RetrievalParams::validate() const {
  if (n < 1) raise(ErrorCode::InvalidArgument, "n must be at least 1");
  if (t < 1) raise(ErrorCode::InvalidArgument, "t must be at least 1");
  if (!std::isfinite(lambda)) raise(ErrorCode::InvalidArgument, "lambda must be finite");
  strategy.validate();
}

std::vector<CandidateDoc> retrieve_top_n_documents(std::span<const float> query_vec,
                                                   const HierarchicalIndexGraph& graph,
                                                   std::uint64_t n) {
  if (n < 1) raise(ErrorCode::InvalidArgument, "n must be at least 1");
  const std::size_t count = graph.documents().size();
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(count);
  for (std::size_t d = 0; d < count; ++d) {
    scored.emplace_back(cosine_similarity(graph.doc_vector(d), query_vec), d);
  }
  const std::size_t take = std::min<std::size_t>(n, count);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<CandidateDoc> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({scored[i].second, 1.0});
  }
  return out;
}

std::vector<CandidateDoc> expand_candidates(const std::vector<CandidateDoc>& seeds,
                                            const HierarchicalIndexGraph& graph,
                                            const Strategy& strategy) {
  if (seeds.empty()) raise(ErrorCode::InvalidArgument, "candidate expansion needs seeds");
  strategy.validate();

  std::map<std::size_t, double> weight;
  const auto raise_to = [&weight](std::size_t pos, double w) {
    const auto [it, inserted] = weight.emplace(pos, w);
    if (!inserted && w > it->second) it->second = w;
  };

  for (const CandidateDoc& seed : seeds) raise_to(seed.position, 1.0);

  for (const CandidateDoc& seed : seeds) {
    switch (strategy.kind) {
      case StrategyKind::OneHop:
        for (const Edge& e : graph.doc_edges()[seed.position]) raise_to(e.target, 1.0);
        break;
      case StrategyKind::Attentive:
        for (const Edge& e : graph.doc_edges()[seed.position]) {
          raise_to(e.target, static_cast<double>(e.weight));
        }
        break;
      case StrategyKind::MultiHop:
        for (const auto& [pos, w] : neighbors(graph, seed.position, strategy.hops)) {
          raise_to(pos, w);
        }
        break;
    }
  }

  std::vector<CandidateDoc> out;
  out.reserve(weight.size());
  for (const auto& [pos, w] : weight) out.push_back({pos, w});
  return out;
}

std::vector<ScoredTriple> retrieve_triples(std::span<const float> query_vec,
                                           const std::vector<CandidateDoc>& candidates,
                                           const HierarchicalIndexGraph& graph, double lambda,
                                           std::uint64_t t) {
  if (t < 1) raise(ErrorCode::InvalidArgument, "t must be at least 1");
  if (!std::isfinite(lambda)) raise(ErrorCode::InvalidArgument, "lambda must be finite");

  std::map<std::size_t, double> cand_weight;
  for (const CandidateDoc& c : candidates) {
    const auto [it, inserted] = cand_weight.emplace(c.position, c.weight);
    if (!inserted && c.weight > it->second) it->second = c.weight;
  }

  // max candidate weight per entity appearing in any candidate document
  std::map<std::size_t, double> entity_weight;
  for (const auto& [pos, w] : cand_weight) {
    for (const std::size_t e : graph.doc_to_entities(pos)) {
      const auto [it, inserted] = entity_weight.emplace(e, w);
      if (!inserted && w > it->second) it->second = w;
    }
  }

  std::map<std::size_t, double> passing;  // entity position -> score
  for (const auto& [e, w] : entity_weight) {
    const double score = w * cosine_similarity(graph.entity_vector(e), query_vec);
    if (score > lambda) passing.emplace(e, score);
  }
  if (passing.empty()) return {};

  struct Pick {
    std::size_t index;
    double score;
  };
  std::map<std::array<std::string, 3>, Pick> best;
  const auto& triples = graph.triples();
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& tr = triples[i];
    const auto doc_pos = graph.doc_position(tr.source_doc);
    if (!doc_pos || cand_weight.find(*doc_pos) == cand_weight.end()) continue;

    double score = 0.0;
    bool passes = false;
    for (const std::string* e : {&tr.head, &tr.tail}) {
      const auto ep = graph.entity_position(*e);
      if (!ep) continue;
      const auto it = passing.find(*ep);
      if (it == passing.end()) continue;
      if (!passes || it->second > score) score = it->second;
      passes = true;
    }
    if (!passes) continue;

    const std::array<std::string, 3> key{tr.head, tr.relation, tr.tail};
    const auto [it, inserted] = best.emplace(key, Pick{i, score});
    if (!inserted && score > it->second.score) it->second = Pick{i, score};
  }

  std::vector<Pick> picks;
  picks.reserve(best.size());
  for (const auto& [key, pick] : best) picks.push_back(pick);
  std::sort(picks.begin(), picks.end(), [](const Pick& a, const Pick& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  if (picks.size() > t) picks.resize(t);

  std::vector<ScoredTriple> out;
  out.reserve(picks.size());
  for (const Pick& pick : picks) {
    out.push_back({triples[pick.index], pick.score});
  }
  return out;
}

RetrievedContext retrieve(const std::string& question, const HierarchicalIndexGraph& graph,
                          const RetrievalParams& params, EmbeddingProvider& embedder) {
  params.validate();
  const std::string query = normalize_text(question);
  if (query.empty()) raise(ErrorCode::InvalidArgument, "question must be nonempty");

  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t embeds_before = embedder.calls();

  const std::vector<EmbeddingVector> embedded = embedder.embed({query});
  const std::span<const float> query_vec{embedded.front().data(), embedded.front().size()};
  if (query_vec.size() != graph.dimension()) {
    raise(ErrorCode::InvalidArgument,
          "query embedding dimension " + std::to_string(query_vec.size()) +
              " does not match the index dimension " + std::to_string(graph.dimension()));
  }

  RetrievedContext context;
  context.query = query;
  const std::vector<CandidateDoc> seeds = retrieve_top_n_documents(query_vec, graph, params.n);
  context.candidates = expand_candidates(seeds, graph, params.strategy);
  context.triples =
      retrieve_triples(query_vec, context.candidates, graph, params.lambda, params.t);

  const auto elapsed = std::chrono::steady_clock::now() - started;
  context.accounting.embed_calls = embedder.calls() - embeds_before;
  context.accounting.completion_calls = 0;
  context.accounting.wall_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
  return context;
}

std::string context_to_json(const RetrievedContext& context,
                            const HierarchicalIndexGraph& graph, int indent) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json triples = ordered_json::array();
  for (const ScoredTriple& st : context.triples) {
    triples.push_back({{"h", st.triple.head},
                       {"r", st.triple.relation},
                       {"t", st.triple.tail},
                       {"score", st.score},
                       {"source_doc", st.triple.source_doc}});
  }
  ordered_json candidates = ordered_json::array();
  for (const CandidateDoc& c : context.candidates) {
    candidates.push_back({{"doc_id", graph.documents()[c.position].id}, {"w", c.weight}});
  }
  ordered_json doc = {{"query", context.query},
                      {"triples", std::move(triples)},
                      {"candidates", std::move(candidates)},
                      {"accounting",
                       {{"embed_calls", context.accounting.embed_calls},
                        {"completion_calls", context.accounting.completion_calls},
                        {"wall_ms", context.accounting.wall_ms}}}};
  return doc.dump(indent);
}

}  // namespace kgrag
