#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgrag/corpus.hpp"
#include "kgrag/kg_extraction.hpp"
#include "kgrag/providers.hpp"

namespace kgrag {

struct Edge {
  std::uint64_t target = 0;  // document position
  float weight = 0.0f;       // cosine similarity
};

struct IndexManifest {
  std::string version = "HIGv1";
  std::uint64_t k = 0;
  std::string embedding_identity;
  std::uint64_t dimension = 0;
  std::uint64_t document_count = 0;
  std::uint64_t entity_count = 0;
  std::uint64_t triple_count = 0;
};

/// Immutable two-layer index: a document similarity graph (top-K cosine
/// neighbors per document) over an entity graph (triples merged on exact
/// normalized entity string, with entity <-> document lookups both ways).
class HierarchicalIndexGraph {
 public:
  struct Parts {
    std::vector<Document> documents;
    std::vector<float> doc_vectors;  // document_count * dimension, row-major
    std::vector<std::vector<Edge>> doc_edges;
    std::vector<Triple> triples;
    std::vector<std::string> entities;  // first-appearance order
    std::vector<float> entity_vectors;  // entity_count * dimension, row-major
    IndexManifest manifest;
  };

  static HierarchicalIndexGraph assemble(Parts parts);

  const std::vector<Document>& documents() const { return documents_; }
  const std::vector<std::vector<Edge>>& doc_edges() const { return doc_edges_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<std::string>& entities() const { return entities_; }
  const IndexManifest& manifest() const { return manifest_; }
  std::size_t dimension() const { return manifest_.dimension; }

  std::span<const float> doc_vector(std::size_t position) const;
  std::span<const float> entity_vector(std::size_t position) const;
  const std::vector<float>& doc_vectors() const { return doc_vectors_; }
  const std::vector<float>& entity_vectors() const { return entity_vectors_; }

  std::optional<std::size_t> doc_position(const std::string& doc_id) const;
  std::optional<std::size_t> entity_position(const std::string& entity) const;

  /// Positions of entities whose triples came from this document, ascending.
  const std::vector<std::size_t>& doc_to_entities(std::size_t doc_position) const;
  /// Positions of documents this entity was extracted from, ascending.
  const std::vector<std::size_t>& entity_to_docs(std::size_t entity_position) const;

 private:
  HierarchicalIndexGraph() = default;

  std::vector<Document> documents_;
  std::vector<float> doc_vectors_;
  std::vector<std::vector<Edge>> doc_edges_;
  std::vector<Triple> triples_;
  std::vector<std::string> entities_;
  std::vector<float> entity_vectors_;
  IndexManifest manifest_;
  std::map<std::string, std::size_t> doc_index_;
  std::map<std::string, std::size_t> entity_index_;
  std::vector<std::vector<std::size_t>> doc_to_entities_;
  std::vector<std::vector<std::size_t>> entity_to_docs_;
};

struct BuildConfig {
  std::uint64_t k = 2;                // outgoing neighbors per document
  bool embed_title = false;           // prepend "title\n" to the embedded text
  std::string cache_path;             // empty disables the extraction cache
  WarningSink warn;                   // optional sink for extraction warnings
};

/// Top-K cosine neighbors per document, most similar first, ties broken by
/// ascending corpus position. Negative similarities are kept. K is clamped
/// by the number of other documents.
std::vector<std::vector<Edge>> build_document_graph(const std::vector<float>& doc_vectors,
                                                    std::size_t count, std::size_t dim,
                                                    std::uint64_t k);

struct BuildResult {
  HierarchicalIndexGraph graph;
  CacheStats cache;
};

BuildResult build_hig(const std::vector<Document>& corpus, EmbeddingProvider& embedder,
                      CompletionProvider& completer, const PromptTemplate& tmpl,
                      const BuildConfig& config);

/// Documents reachable from `start` by walks of 1..hops edges, with the
/// maximum product of edge weights over all such walks. Excludes `start`.
std::vector<std::pair<std::size_t, double>> neighbors(const HierarchicalIndexGraph& graph,
                                                      std::size_t start, std::size_t hops);

void save_index(const HierarchicalIndexGraph& graph, const std::string& dir);
HierarchicalIndexGraph load_index(const std::string& dir);

bool structurally_equal(const HierarchicalIndexGraph& a, const HierarchicalIndexGraph& b);

}  // namespace kgrag
