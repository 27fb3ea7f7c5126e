#include "kgrag/corpus.hpp"

#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {
namespace {

using nlohmann::json;

bool blank_line(const std::string& line) {
  return normalize_text(line).empty();
}

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::exception& e) {
    raise(ErrorCode::Parse,
          path + ":" + std::to_string(lineno) + ": malformed JSON line: " + e.what());
  }
  if (!record.is_object()) {
    raise(ErrorCode::Parse,
          path + ":" + std::to_string(lineno) + ": expected a JSON object per line");
  }
  return record;
}

std::string require_string(const json& record, const char* key, const std::string& path,
                           std::size_t lineno) {
  if (!record.contains(key) || !record[key].is_string()) {
    raise(ErrorCode::Parse, path + ":" + std::to_string(lineno) +
                                ": missing or non-string field \"" + key + "\"");
  }
  return record[key].get<std::string>();
}

std::ifstream open_or_raise(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open file: " + path);
  return in;
}

}  // namespace

std::vector<Document> load_corpus(const std::string& path) {
  auto in = open_or_raise(path);
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;  // id -> first line
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_line(line)) continue;
    const json record = parse_line(line, path, lineno);

    Document doc;
    doc.id = require_string(record, "id", path, lineno);
    if (doc.id.empty()) {
      raise(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": empty document id");
    }
    if (auto [it, inserted] = seen.emplace(doc.id, lineno); !inserted) {
      raise(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": duplicate id \"" +
                                  doc.id + "\" (first seen on line " +
                                  std::to_string(it->second) + ")");
    }
    doc.text = normalize_text(require_string(record, "text", path, lineno));
    if (doc.text.empty()) {
      raise(ErrorCode::Parse, path + ":" + std::to_string(lineno) +
                                  ": document text empty after normalization");
    }
    if (record.contains("title") && !record["title"].is_null()) {
      if (!record["title"].is_string()) {
        raise(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": non-string title");
      }
      doc.title = normalize_text(record["title"].get<std::string>());
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<QAItem> load_qa(const std::string& path) {
  auto in = open_or_raise(path);
  std::vector<QAItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_line(line)) continue;
    const json record = parse_line(line, path, lineno);

    QAItem item;
    item.id = require_string(record, "id", path, lineno);
    item.question = normalize_text(require_string(record, "question", path, lineno));
    if (item.question.empty()) {
      raise(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": empty question");
    }
    if (record.contains("answers")) {
      if (!record["answers"].is_array()) {
        raise(ErrorCode::Parse,
              path + ":" + std::to_string(lineno) + ": \"answers\" must be an array");
      }
      for (const auto& a : record["answers"]) {
        if (!a.is_string()) {
          raise(ErrorCode::Parse,
                path + ":" + std::to_string(lineno) + ": non-string gold answer");
        }
        item.gold_answers.push_back(a.get<std::string>());
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace kgrag
