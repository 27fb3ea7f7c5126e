#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgrag/hig.hpp"
#include "kgrag/providers.hpp"

namespace kgrag {

enum class StrategyKind { OneHop, Attentive, MultiHop };

struct Strategy {
  StrategyKind kind = StrategyKind::OneHop;
  std::size_t hops = 2;  // multi-hop only

  void validate() const;
};

StrategyKind strategy_from_name(const std::string& name);  // "one-hop" | "attentive" | "multi-hop"
std::string strategy_name(StrategyKind kind);

struct RetrievalParams {
  std::uint64_t n = 3;     // seed documents
  std::uint64_t t = 20;    // max retrieved triples
  double lambda = 0.1;     // score threshold, strict
  Strategy strategy;

  void validate() const;
};

struct CandidateDoc {
  std::size_t position = 0;  // document position in the graph
  double weight = 1.0;
};

struct ScoredTriple {
  Triple triple;
  double score = 0.0;
};

struct Accounting {
  std::uint64_t embed_calls = 0;
  std::uint64_t completion_calls = 0;
  std::uint64_t wall_ms = 0;
};

struct RetrievedContext {
  std::string query;
  std::vector<ScoredTriple> triples;      // score descending, ties by index position
  std::vector<CandidateDoc> candidates;   // document position ascending
  Accounting accounting;
};

/// The N documents most similar to the query vector, weight 1 each, most
/// similar first, ties by ascending corpus position.
std::vector<CandidateDoc> retrieve_top_n_documents(std::span<const float> query_vec,
                                                   const HierarchicalIndexGraph& graph,
                                                   std::uint64_t n);

/// Grows the seed set along document edges. Seeds keep weight 1; expansion
/// weights depend on the strategy (1 for one-hop, edge weight for attentive,
/// best path product for multi-hop). A document reached several ways takes
/// its maximum weight. Result sorted by document position.
std::vector<CandidateDoc> expand_candidates(const std::vector<CandidateDoc>& seeds,
                                            const HierarchicalIndexGraph& graph,
                                            const Strategy& strategy);

/// Entity filter and triple selection: an entity scores w * cos(entity,
/// query) with w the maximum weight among candidate documents containing it;
/// entities scoring strictly above lambda contribute their triples from
/// candidate documents. Duplicate (h, r, t) keep the highest score, first
/// index position on ties. Sorted by score descending, capped at t.
std::vector<ScoredTriple> retrieve_triples(std::span<const float> query_vec,
                                           const std::vector<CandidateDoc>& candidates,
                                           const HierarchicalIndexGraph& graph, double lambda,
                                           std::uint64_t t);

/// One embedding call, no completion calls: embed the question, seed with the
/// top-N documents, expand by strategy, filter triples.
RetrievedContext retrieve(const std::string& question, const HierarchicalIndexGraph& graph,
                          const RetrievalParams& params, EmbeddingProvider& embedder);

std::string context_to_json(const RetrievedContext& context,
                            const HierarchicalIndexGraph& graph, int indent = -1);

}  // namespace kgrag
