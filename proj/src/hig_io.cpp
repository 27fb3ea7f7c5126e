#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/hig.hpp"
#include "kgrag/text.hpp"

namespace kgrag {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "HIGv1";

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::Io, "write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::Io, "read failed for " + path.string());
  return bytes;
}

void append_u64(std::string& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

void append_f32(std::string& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string section)
      : bytes_(bytes), section_(std::move(section)) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) {
      value |= static_cast<std::uint64_t>(
                   static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
               << (8 * i);
    }
    pos_ += 8;
    return value;
  }

  float f32() {
    need(4);
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
      bits |= static_cast<std::uint32_t>(
                  static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
              << (8 * i);
    }
    pos_ += 4;
    float value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      raise(ErrorCode::Corrupt, section_ + ": truncated (expected more data)");
    }
  }

  const std::string& bytes_;
  std::string section_;
  std::size_t pos_ = 0;
};

struct SectionSum {
  std::uint64_t bytes = 0;
  std::string crc;
};

SectionSum checksum(const std::string& bytes) {
  return {bytes.size(), to_hex(crc32(bytes.data(), bytes.size()))};
}

std::string jsonl_documents(const std::vector<Document>& documents) {
  std::string out;
  for (const Document& doc : documents) {
    ordered_json record = {{"id", doc.id}, {"text", doc.text}};
    if (doc.title.has_value()) record["title"] = *doc.title;
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

std::string jsonl_triples(const std::vector<Triple>& triples) {
  std::string out;
  for (const Triple& t : triples) {
    ordered_json record = {
        {"h", t.head}, {"r", t.relation}, {"t", t.tail}, {"source_doc", t.source_doc}};
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

ordered_json parse_json_line(const std::string& line, const std::string& file,
                             std::size_t line_no) {
  ordered_json record = ordered_json::parse(line, nullptr, false);
  if (record.is_discarded() || !record.is_object()) {
    raise(ErrorCode::Corrupt, file + " line " + std::to_string(line_no) + ": invalid record");
  }
  return record;
}

}  // namespace

void save_index(const HierarchicalIndexGraph& graph, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::Io, "cannot create index directory " + dir + ": " + ec.message());

  const std::string documents = jsonl_documents(graph.documents());
  const std::string triples = jsonl_triples(graph.triples());

  std::string vectors;
  vectors.reserve((graph.doc_vectors().size() + graph.entity_vectors().size()) * 4);
  for (float v : graph.doc_vectors()) append_f32(vectors, v);
  for (float v : graph.entity_vectors()) append_f32(vectors, v);

  std::string edges;
  for (const auto& list : graph.doc_edges()) {
    append_u64(edges, list.size());
    for (const Edge& e : list) {
      append_u64(edges, e.target);
      append_f32(edges, e.weight);
    }
  }

  const SectionSum vec_sum = checksum(vectors);
  const SectionSum edge_sum = checksum(edges);
  const IndexManifest& m = graph.manifest();
  ordered_json manifest = {
      {"version", m.version},
      {"k", m.k},
      {"embedding_identity", m.embedding_identity},
      {"dimension", m.dimension},
      {"document_count", m.document_count},
      {"entity_count", m.entity_count},
      {"triple_count", m.triple_count},
      {"checksums",
       {{"vectors.bin", {{"bytes", vec_sum.bytes}, {"crc32", vec_sum.crc}}},
        {"edges.bin", {{"bytes", edge_sum.bytes}, {"crc32", edge_sum.crc}}}}},
  };

  const fs::path base(dir);
  write_file(base / "manifest.json", manifest.dump(2) + "\n");
  write_file(base / "documents.jsonl", documents);
  write_file(base / "triples.jsonl", triples);
  write_file(base / "vectors.bin", vectors);
  write_file(base / "edges.bin", edges);
}

HierarchicalIndexGraph load_index(const std::string& dir) {
  const fs::path base(dir);

  ordered_json manifest;
  {
    const std::string raw = read_file(base / "manifest.json");
    manifest = ordered_json::parse(raw, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) {
      raise(ErrorCode::Corrupt, "manifest.json: not a JSON object");
    }
  }
  if (!manifest.contains("version") || !manifest["version"].is_string()) {
    raise(ErrorCode::Corrupt, "manifest.json: missing version");
  }
  const std::string version = manifest["version"].get<std::string>();
  if (version != kVersion) {
    raise(ErrorCode::VersionMismatch, "index version \"" + version +
                                          "\" is not supported (this build reads " +
                                          kVersion + ")");
  }
  IndexManifest m;
  try {
    m.version = version;
    m.k = manifest.at("k").get<std::uint64_t>();
    m.embedding_identity = manifest.at("embedding_identity").get<std::string>();
    m.dimension = manifest.at("dimension").get<std::uint64_t>();
    m.document_count = manifest.at("document_count").get<std::uint64_t>();
    m.entity_count = manifest.at("entity_count").get<std::uint64_t>();
    m.triple_count = manifest.at("triple_count").get<std::uint64_t>();
  } catch (const ordered_json::exception& e) {
    raise(ErrorCode::Corrupt, std::string("manifest.json: ") + e.what());
  }

  const auto verify = [&](const char* name, const std::string& bytes) {
    const auto& sums = manifest["checksums"];
    if (!sums.is_object() || !sums.contains(name)) {
      raise(ErrorCode::Corrupt, std::string("manifest.json: no checksum for ") + name);
    }
    const auto expect_bytes = sums[name].at("bytes").get<std::uint64_t>();
    const auto expect_crc = sums[name].at("crc32").get<std::string>();
    if (bytes.size() != expect_bytes) {
      raise(ErrorCode::Corrupt, std::string(name) + ": expected " +
                                    std::to_string(expect_bytes) + " bytes, found " +
                                    std::to_string(bytes.size()));
    }
    if (to_hex(crc32(bytes.data(), bytes.size())) != expect_crc) {
      raise(ErrorCode::Corrupt, std::string(name) + ": checksum mismatch");
    }
  };

  const std::string vectors_raw = read_file(base / "vectors.bin");
  const std::string edges_raw = read_file(base / "edges.bin");
  try {
    verify("vectors.bin", vectors_raw);
    verify("edges.bin", edges_raw);
  } catch (const ordered_json::exception& e) {
    raise(ErrorCode::Corrupt, std::string("manifest.json: bad checksum record: ") + e.what());
  }

  HierarchicalIndexGraph::Parts parts;
  parts.manifest = m;

  {
    const std::string raw = read_file(base / "documents.jsonl");
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < raw.size()) {
      auto end = raw.find('\n', pos);
      if (end == std::string::npos) end = raw.size();
      const std::string line = raw.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ordered_json record = parse_json_line(line, "documents.jsonl", line_no);
      Document doc;
      try {
        doc.id = record.at("id").get<std::string>();
        doc.text = record.at("text").get<std::string>();
        if (record.contains("title")) doc.title = record["title"].get<std::string>();
      } catch (const ordered_json::exception& e) {
        raise(ErrorCode::Corrupt,
              "documents.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
      parts.documents.push_back(std::move(doc));
    }
    if (parts.documents.size() != m.document_count) {
      raise(ErrorCode::Corrupt, "documents.jsonl: expected " +
                                    std::to_string(m.document_count) + " records, found " +
                                    std::to_string(parts.documents.size()));
    }
  }

  {
    const std::string raw = read_file(base / "triples.jsonl");
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < raw.size()) {
      auto end = raw.find('\n', pos);
      if (end == std::string::npos) end = raw.size();
      const std::string line = raw.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ordered_json record = parse_json_line(line, "triples.jsonl", line_no);
      Triple t;
      try {
        t.head = record.at("h").get<std::string>();
        t.relation = record.at("r").get<std::string>();
        t.tail = record.at("t").get<std::string>();
        t.source_doc = record.at("source_doc").get<std::string>();
      } catch (const ordered_json::exception& e) {
        raise(ErrorCode::Corrupt,
              "triples.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
      parts.triples.push_back(std::move(t));
    }
    if (parts.triples.size() != m.triple_count) {
      raise(ErrorCode::Corrupt, "triples.jsonl: expected " + std::to_string(m.triple_count) +
                                    " records, found " +
                                    std::to_string(parts.triples.size()));
    }
  }

  {
    std::map<std::string, bool> seen;
    for (const Triple& t : parts.triples) {
      for (const std::string* e : {&t.head, &t.tail}) {
        if (seen.emplace(*e, true).second) parts.entities.push_back(*e);
      }
    }
    if (parts.entities.size() != m.entity_count) {
      raise(ErrorCode::Corrupt, "triples.jsonl: derives " +
                                    std::to_string(parts.entities.size()) +
                                    " entities, manifest says " +
                                    std::to_string(m.entity_count));
    }
  }

  {
    ByteReader reader(vectors_raw, "vectors.bin");
    const std::size_t doc_floats = m.document_count * m.dimension;
    const std::size_t ent_floats = m.entity_count * m.dimension;
    parts.doc_vectors.reserve(doc_floats);
    for (std::size_t i = 0; i < doc_floats; ++i) parts.doc_vectors.push_back(reader.f32());
    parts.entity_vectors.reserve(ent_floats);
    for (std::size_t i = 0; i < ent_floats; ++i) parts.entity_vectors.push_back(reader.f32());
    if (!reader.exhausted()) {
      raise(ErrorCode::Corrupt, "vectors.bin: trailing bytes after the vector blocks");
    }
  }

  {
    ByteReader reader(edges_raw, "edges.bin");
    parts.doc_edges.resize(m.document_count);
    for (std::size_t d = 0; d < m.document_count; ++d) {
      const std::uint64_t count = reader.u64();
      if (count > m.document_count) {
        raise(ErrorCode::Corrupt, "edges.bin: implausible neighbor count");
      }
      parts.doc_edges[d].reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        Edge e;
        e.target = reader.u64();
        e.weight = reader.f32();
        parts.doc_edges[d].push_back(e);
      }
    }
    if (!reader.exhausted()) {
      raise(ErrorCode::Corrupt, "edges.bin: trailing bytes after the edge lists");
    }
  }

  try {
    return HierarchicalIndexGraph::assemble(std::move(parts));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Corrupt) throw;
    raise(ErrorCode::Corrupt, std::string("index at ") + dir + " is inconsistent: " + e.what());
  }
}

}  // namespace kgrag
