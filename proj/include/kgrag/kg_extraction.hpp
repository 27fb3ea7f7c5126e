#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgrag/corpus.hpp"
#include "kgrag/providers.hpp"

namespace kgrag {

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  std::string source_doc;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct PromptExample {
  std::string text;
  std::string triples;  // rendered as "(h; r; t), (h; r; t), ..."
};

class PromptTemplate {
 public:
  PromptTemplate(std::string instruction, std::vector<PromptExample> examples,
                 std::string language);

  const std::string& instruction() const { return instruction_; }
  const std::vector<PromptExample>& examples() const { return examples_; }
  const std::string& language() const { return language_; }

  /// Stable hex digest over instruction, examples and language; cache key
  /// component so edited templates invalidate prior extractions.
  std::string hash() const;

 private:
  std::string instruction_;
  std::vector<PromptExample> examples_;
  std::string language_;
};

PromptTemplate english_template();
PromptTemplate chinese_template();

std::string build_extraction_prompt(const PromptTemplate& tmpl, const std::string& doc_text);

struct ParsedTriples {
  std::vector<Triple> triples;
  std::size_t skipped = 0;  // groups dropped for not having exactly 3 parts
};

/// Pulls "(head; relation; tail)" groups out of a model reply. Tolerant of
/// leading/trailing chatter; groups that do not split into exactly three
/// nonempty fields are counted, not fatal. Duplicate triples keep the first.
ParsedTriples parse_triples(const std::string& reply, const std::string& source_doc = "");

/// Inverse of parsing a single group: "(h; r; t)".
std::string format_triple(const Triple& triple);

using WarningSink = std::function<void(const std::string&)>;

std::vector<Triple> extract_document_kg(const Document& doc, CompletionProvider& provider,
                                        const PromptTemplate& tmpl,
                                        const WarningSink& warn = nullptr);

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

/// Append-only JSONL cache of per-document extraction results, keyed by
/// (doc_id, template hash, model identity). Rebuilding with an unchanged
/// corpus and template costs zero completion calls.
class ExtractionCache {
 public:
  explicit ExtractionCache(std::string path);

  std::optional<std::vector<Triple>> lookup(const std::string& doc_id,
                                            const std::string& template_hash,
                                            const std::string& model);
  void store(const std::string& doc_id, const std::string& template_hash,
             const std::string& model, const std::vector<Triple>& triples);

  const CacheStats& stats() const { return stats_; }

 private:
  std::string path_;
  std::map<std::string, std::vector<std::array<std::string, 3>>> entries_;
  CacheStats stats_;
};

}  // namespace kgrag
