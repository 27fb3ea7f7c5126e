#pragma once

#include <optional>
#include <string>
#include <vector>

namespace kgrag {

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> title;

  bool operator==(const Document&) const = default;
};

struct QAItem {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
};

/// Reads a JSONL corpus ({"id", "text", "title"?} per line) in file order.
/// Text and title are whitespace-normalized; duplicate or empty ids and
/// empty normalized text are hard errors naming the offending line.
std::vector<Document> load_corpus(const std::string& path);

/// Reads a JSONL QA set ({"id", "question", "answers"?} per line).
std::vector<QAItem> load_qa(const std::string& path);

}  // namespace kgrag
