#include "kgrag/hig.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <thread>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

HierarchicalIndexGraph HierarchicalIndexGraph::assemble(Parts parts) {
  const auto& m = parts.manifest;
  const std::size_t docs = parts.documents.size();
  const std::size_t ents = parts.entities.size();
  const std::size_t dim = m.dimension;

  if (docs == 0) raise(ErrorCode::InvalidArgument, "graph needs at least one document");
  if (dim == 0) raise(ErrorCode::InvalidArgument, "graph dimension must be positive");
  if (m.document_count != docs || m.entity_count != ents ||
      m.triple_count != parts.triples.size()) {
    raise(ErrorCode::InvalidArgument, "manifest counts disagree with graph contents");
  }
  if (parts.doc_vectors.size() != docs * dim) {
    raise(ErrorCode::InvalidArgument, "document vector block has the wrong size");
  }
  if (parts.entity_vectors.size() != ents * dim) {
    raise(ErrorCode::InvalidArgument, "entity vector block has the wrong size");
  }
  if (parts.doc_edges.size() != docs) {
    raise(ErrorCode::InvalidArgument, "edge lists must cover every document");
  }

  HierarchicalIndexGraph g;
  for (std::size_t i = 0; i < docs; ++i) {
    if (!g.doc_index_.emplace(parts.documents[i].id, i).second) {
      raise(ErrorCode::InvalidArgument,
            "duplicate document id \"" + parts.documents[i].id + "\"");
    }
  }
  for (std::size_t i = 0; i < ents; ++i) {
    if (!g.entity_index_.emplace(parts.entities[i], i).second) {
      raise(ErrorCode::InvalidArgument, "duplicate entity \"" + parts.entities[i] + "\"");
    }
  }

  for (std::size_t d = 0; d < docs; ++d) {
    const auto& edges = parts.doc_edges[d];
    if (edges.size() > m.k) {
      raise(ErrorCode::InvalidArgument,
            "document \"" + parts.documents[d].id + "\" has more than K edges");
    }
    for (const Edge& e : edges) {
      if (e.target >= docs) {
        raise(ErrorCode::InvalidArgument, "edge target out of range");
      }
      if (e.target == d) {
        raise(ErrorCode::InvalidArgument,
              "self-edge on document \"" + parts.documents[d].id + "\"");
      }
      if (!std::isfinite(e.weight)) {
        raise(ErrorCode::InvalidArgument, "non-finite edge weight");
      }
    }
  }

  // entities must be exactly the first-appearance scan of the triples, so a
  // persisted graph can rebuild them from triples.jsonl alone
  {
    std::vector<std::string> derived;
    std::map<std::string, std::size_t> seen;
    for (const Triple& t : parts.triples) {
      if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
        raise(ErrorCode::InvalidArgument, "triple with empty field");
      }
      if (g.doc_index_.find(t.source_doc) == g.doc_index_.end()) {
        raise(ErrorCode::InvalidArgument,
              "triple source \"" + t.source_doc + "\" is not a document in the graph");
      }
      for (const std::string* e : {&t.head, &t.tail}) {
        if (seen.emplace(*e, derived.size()).second) derived.push_back(*e);
      }
    }
    if (derived != parts.entities) {
      raise(ErrorCode::InvalidArgument,
            "entity list does not match the triples' first-appearance order");
    }
  }

  g.doc_to_entities_.assign(docs, {});
  g.entity_to_docs_.assign(ents, {});
  for (const Triple& t : parts.triples) {
    const std::size_t d = g.doc_index_.at(t.source_doc);
    for (const std::string* name : {&t.head, &t.tail}) {
      const std::size_t e = g.entity_index_.at(*name);
      auto& de = g.doc_to_entities_[d];
      if (std::find(de.begin(), de.end(), e) == de.end()) de.push_back(e);
      auto& ed = g.entity_to_docs_[e];
      if (std::find(ed.begin(), ed.end(), d) == ed.end()) ed.push_back(d);
    }
  }
  for (auto& v : g.doc_to_entities_) std::sort(v.begin(), v.end());
  for (auto& v : g.entity_to_docs_) std::sort(v.begin(), v.end());

  g.documents_ = std::move(parts.documents);
  g.doc_vectors_ = std::move(parts.doc_vectors);
  g.doc_edges_ = std::move(parts.doc_edges);
  g.triples_ = std::move(parts.triples);
  g.entities_ = std::move(parts.entities);
  g.entity_vectors_ = std::move(parts.entity_vectors);
  g.manifest_ = std::move(parts.manifest);
  return g;
}

std::span<const float> HierarchicalIndexGraph::doc_vector(std::size_t position) const {
  const std::size_t dim = manifest_.dimension;
  return {doc_vectors_.data() + position * dim, dim};
}

std::span<const float> HierarchicalIndexGraph::entity_vector(std::size_t position) const {
  const std::size_t dim = manifest_.dimension;
  return {entity_vectors_.data() + position * dim, dim};
}

std::optional<std::size_t> HierarchicalIndexGraph::doc_position(
    const std::string& doc_id) const {
  const auto it = doc_index_.find(doc_id);
  if (it == doc_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> HierarchicalIndexGraph::entity_position(
    const std::string& entity) const {
  const auto it = entity_index_.find(entity);
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::size_t>& HierarchicalIndexGraph::doc_to_entities(
    std::size_t doc_position) const {
  return doc_to_entities_.at(doc_position);
}

const std::vector<std::size_t>& HierarchicalIndexGraph::entity_to_docs(
    std::size_t entity_position) const {
  return entity_to_docs_.at(entity_position);
}

std::vector<std::vector<Edge>> build_document_graph(const std::vector<float>& doc_vectors,
                                                    std::size_t count, std::size_t dim,
                                                    std::uint64_t k) {
  if (count == 0) raise(ErrorCode::InvalidArgument, "need at least one document vector");
  if (dim == 0 || doc_vectors.size() != count * dim) {
    raise(ErrorCode::InvalidArgument, "vector block size does not match count and dimension");
  }

  std::vector<std::vector<Edge>> edges(count);
  if (k == 0 || count == 1) return edges;

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t d = 0; d < count; ++d) {
    const std::span<const float> vd{doc_vectors.data() + d * dim, dim};
    scored.clear();
    scored.reserve(count - 1);
    for (std::size_t j = 0; j < count; ++j) {
      if (j == d) continue;
      const std::span<const float> vj{doc_vectors.data() + j * dim, dim};
      scored.emplace_back(cosine_similarity(vd, vj), j);
    }
    const std::size_t take = std::min<std::size_t>(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    edges[d].reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      edges[d].push_back({scored[i].second, static_cast<float>(scored[i].first)});
    }
  }
  return edges;
}

namespace {

struct DocExtraction {
  std::vector<Triple> triples;
  std::vector<std::string> warnings;
  bool from_cache = false;
  std::exception_ptr failure;
};

}  // namespace

BuildResult build_hig(const std::vector<Document>& corpus, EmbeddingProvider& embedder,
                      CompletionProvider& completer, const PromptTemplate& tmpl,
                      const BuildConfig& config) {
  if (corpus.empty()) raise(ErrorCode::InvalidArgument, "cannot index an empty corpus");

  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const Document& doc : corpus) {
    if (config.embed_title && doc.title.has_value()) {
      texts.push_back(*doc.title + "\n" + doc.text);
    } else {
      texts.push_back(doc.text);
    }
  }
  const std::vector<EmbeddingVector> doc_embeds = embedder.embed(texts);
  const std::size_t dim = doc_embeds.front().size();

  std::optional<ExtractionCache> cache;
  if (!config.cache_path.empty()) cache.emplace(config.cache_path);
  const std::string template_hash = tmpl.hash();
  const std::string model = completer.identity();

  std::vector<DocExtraction> results(corpus.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (cache) {
      if (auto hit = cache->lookup(corpus[i].id, template_hash, model)) {
        results[i].triples = std::move(*hit);
        results[i].from_cache = true;
        continue;
      }
    }
    pending.push_back(i);
  }

  if (!pending.empty()) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>({pending.size(), hw, 8});
    std::atomic<std::size_t> next{0};
    auto run = [&] {
      while (true) {
        const std::size_t slot = next.fetch_add(1);
        if (slot >= pending.size()) break;
        const std::size_t i = pending[slot];
        DocExtraction& out = results[i];
        try {
          auto sink = [&out](const std::string& msg) { out.warnings.push_back(msg); };
          out.triples = extract_document_kg(corpus[i], completer, tmpl, sink);
        } catch (...) {
          out.failure = std::current_exception();
        }
      }
    };
    if (workers == 1) {
      run();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
      for (auto& t : pool) t.join();
    }
  }

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (results[i].failure) std::rethrow_exception(results[i].failure);
    if (config.warn) {
      for (const auto& msg : results[i].warnings) config.warn(msg);
    }
    if (cache && !results[i].from_cache) {
      cache->store(corpus[i].id, template_hash, model, results[i].triples);
    }
  }

  std::vector<Triple> triples;
  std::vector<std::string> entities;
  std::map<std::string, std::size_t> entity_index;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (Triple& t : results[i].triples) {
      for (const std::string* e : {&t.head, &t.tail}) {
        if (entity_index.emplace(*e, entities.size()).second) entities.push_back(*e);
      }
      triples.push_back(std::move(t));
    }
  }

  std::vector<float> entity_vectors;
  if (!entities.empty()) {
    const std::vector<EmbeddingVector> embeds = embedder.embed(entities);
    entity_vectors.reserve(entities.size() * dim);
    for (const auto& v : embeds) {
      entity_vectors.insert(entity_vectors.end(), v.begin(), v.end());
    }
  }

  std::vector<float> doc_vectors;
  doc_vectors.reserve(corpus.size() * dim);
  for (const auto& v : doc_embeds) {
    doc_vectors.insert(doc_vectors.end(), v.begin(), v.end());
  }

  HierarchicalIndexGraph::Parts parts;
  parts.documents = corpus;
  parts.doc_edges = build_document_graph(doc_vectors, corpus.size(), dim, config.k);
  parts.doc_vectors = std::move(doc_vectors);
  parts.triples = std::move(triples);
  parts.entities = std::move(entities);
  parts.entity_vectors = std::move(entity_vectors);
  parts.manifest.version = "HIGv1";
  parts.manifest.k = config.k;
  parts.manifest.embedding_identity = embedder.identity();
  parts.manifest.dimension = dim;
  parts.manifest.document_count = parts.documents.size();
  parts.manifest.entity_count = parts.entities.size();
  parts.manifest.triple_count = parts.triples.size();

  BuildResult out{HierarchicalIndexGraph::assemble(std::move(parts)),
                  cache ? cache->stats() : CacheStats{}};
  return out;
}

std::vector<std::pair<std::size_t, double>> neighbors(const HierarchicalIndexGraph& graph,
                                                      std::size_t start, std::size_t hops) {
  const std::size_t count = graph.documents().size();
  if (start >= count) raise(ErrorCode::InvalidArgument, "unknown start document");
  if (hops < 1) raise(ErrorCode::InvalidArgument, "hops must be at least 1");

  constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  // per layer: extreme products over walks of exactly L edges (min tracked so
  // negative weights are handled exactly)
  std::vector<double> max_prod(count, kUnset), min_prod(count, kUnset);
  std::vector<double> best(count, kUnset);
  max_prod[start] = min_prod[start] = 1.0;

  std::vector<double> next_max(count), next_min(count);
  for (std::size_t layer = 1; layer <= hops; ++layer) {
    std::fill(next_max.begin(), next_max.end(), kUnset);
    std::fill(next_min.begin(), next_min.end(), kUnset);
    bool any = false;
    for (std::size_t u = 0; u < count; ++u) {
      if (std::isnan(max_prod[u])) continue;
      for (const Edge& e : graph.doc_edges()[u]) {
        const double w = static_cast<double>(e.weight);
        const double a = max_prod[u] * w;
        const double b = min_prod[u] * w;
        const double hi = std::max(a, b);
        const double lo = std::min(a, b);
        double& nm = next_max[e.target];
        double& nn = next_min[e.target];
        if (std::isnan(nm) || hi > nm) nm = hi;
        if (std::isnan(nn) || lo < nn) nn = lo;
        any = true;
      }
    }
    max_prod.swap(next_max);
    min_prod.swap(next_min);
    for (std::size_t v = 0; v < count; ++v) {
      if (v == start || std::isnan(max_prod[v])) continue;
      if (std::isnan(best[v]) || max_prod[v] > best[v]) best[v] = max_prod[v];
    }
    if (!any) break;
  }

  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t v = 0; v < count; ++v) {
    if (!std::isnan(best[v])) out.emplace_back(v, best[v]);
  }
  return out;
}

bool structurally_equal(const HierarchicalIndexGraph& a, const HierarchicalIndexGraph& b) {
  const auto same_bits = [](const std::vector<float>& x, const std::vector<float>& y) {
    if (x.size() != y.size()) return false;
    return x.empty() ||
           std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
  };
  const auto& ma = a.manifest();
  const auto& mb = b.manifest();
  if (ma.version != mb.version || ma.k != mb.k ||
      ma.embedding_identity != mb.embedding_identity || ma.dimension != mb.dimension ||
      ma.document_count != mb.document_count || ma.entity_count != mb.entity_count ||
      ma.triple_count != mb.triple_count) {
    return false;
  }
  if (a.documents().size() != b.documents().size()) return false;
  for (std::size_t i = 0; i < a.documents().size(); ++i) {
    const Document& da = a.documents()[i];
    const Document& db = b.documents()[i];
    if (da.id != db.id || da.text != db.text || da.title != db.title) return false;
  }
  if (a.doc_edges().size() != b.doc_edges().size()) return false;
  for (std::size_t i = 0; i < a.doc_edges().size(); ++i) {
    const auto& ea = a.doc_edges()[i];
    const auto& eb = b.doc_edges()[i];
    if (ea.size() != eb.size()) return false;
    for (std::size_t j = 0; j < ea.size(); ++j) {
      if (ea[j].target != eb[j].target) return false;
      if (std::memcmp(&ea[j].weight, &eb[j].weight, sizeof(float)) != 0) return false;
    }
  }
  if (a.triples() != b.triples() || a.entities() != b.entities()) return false;
  return same_bits(a.doc_vectors(), b.doc_vectors()) &&
         same_bits(a.entity_vectors(), b.entity_vectors());
}

}  // namespace kgrag
