#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/engine.hpp"
#include "kgrag/error.hpp"
#include "kgrag/hig.hpp"
#include "test_support.hpp"

using kgrag::Error;
using kgrag::ErrorCode;
using kgrag::HierarchicalIndexGraph;
using nlohmann::json;
using testsup::TempDir;
using testsup::fixture;
using testsup::read_file;
using testsup::write_file;

namespace {

HierarchicalIndexGraph build_fixture_graph() {
  const auto corpus = kgrag::load_corpus(fixture("corpus10.jsonl"));
  auto providers = kgrag::make_providers_from_file(fixture("mock_providers.json"), std::nullopt);
  kgrag::BuildConfig config;
  auto result = kgrag::build_hig(corpus, *providers.embedding, *providers.completion,
                                 kgrag::english_template(), config);
  return std::move(result.graph);
}

}  // namespace

TEST_CASE("save and load round-trip bit-exactly") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  for (const char* name :
       {"manifest.json", "documents.jsonl", "triples.jsonl", "vectors.bin", "edges.bin"}) {
    CHECK(std::filesystem::exists(dir.path / name));
  }

  const auto loaded = kgrag::load_index(dir.str());
  CHECK(kgrag::structurally_equal(graph, loaded));
  CHECK(loaded.triples().size() == 53);
  CHECK(loaded.entities().size() == 51);
}

TEST_CASE("saving twice produces identical bytes") {
  const auto graph = build_fixture_graph();
  TempDir a;
  TempDir b;
  kgrag::save_index(graph, a.str());
  kgrag::save_index(graph, b.str());
  for (const char* name :
       {"manifest.json", "documents.jsonl", "triples.jsonl", "vectors.bin", "edges.bin"}) {
    CHECK(read_file(a.file(name)) == read_file(b.file(name)));
  }
}

TEST_CASE("the manifest records sizes and checksums") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  const json manifest = json::parse(read_file(dir.file("manifest.json")));
  CHECK(manifest["version"] == "HIGv1");
  CHECK(manifest["dimension"] == 64);
  CHECK(manifest["document_count"] == 10);
  CHECK(manifest["entity_count"] == 51);
  CHECK(manifest["triple_count"] == 53);
  CHECK(manifest["checksums"]["vectors.bin"]["bytes"] ==
        read_file(dir.file("vectors.bin")).size());
  CHECK(manifest["checksums"]["edges.bin"]["bytes"] ==
        read_file(dir.file("edges.bin")).size());
  CHECK(manifest["checksums"]["vectors.bin"]["crc32"].is_string());
}

TEST_CASE("an unknown index version is refused by name") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  json manifest = json::parse(read_file(dir.file("manifest.json")));
  manifest["version"] = "HIGv9";
  write_file(dir.file("manifest.json"), manifest.dump(2) + "\n");

  try {
    kgrag::load_index(dir.str());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("HIGv9") != std::string::npos);
    CHECK(msg.find("HIGv1") != std::string::npos);
  }
}

TEST_CASE("truncated binaries are reported as corrupt, naming the file") {
  const auto graph = build_fixture_graph();

  for (const char* name : {"vectors.bin", "edges.bin"}) {
    TempDir dir;
    kgrag::save_index(graph, dir.str());
    std::string bytes = read_file(dir.file(name));
    bytes.resize(bytes.size() / 2);
    write_file(dir.file(name), bytes);
    try {
      kgrag::load_index(dir.str());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Corrupt);
      CHECK(std::string(e.what()).find(name) != std::string::npos);
    }
  }
}

TEST_CASE("a flipped bit fails the checksum") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  std::string bytes = read_file(dir.file("vectors.bin"));
  bytes[bytes.size() / 3] = static_cast<char>(bytes[bytes.size() / 3] ^ 0x40);
  write_file(dir.file("vectors.bin"), bytes);

  try {
    kgrag::load_index(dir.str());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Corrupt);
    const std::string msg = e.what();
    CHECK(msg.find("vectors.bin") != std::string::npos);
    CHECK(msg.find("checksum") != std::string::npos);
  }
}

TEST_CASE("mangled jsonl is corrupt with a line number") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  std::string triples = read_file(dir.file("triples.jsonl"));
  triples.insert(0, "garbage not json\n");
  write_file(dir.file("triples.jsonl"), triples);

  try {
    kgrag::load_index(dir.str());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Corrupt);
    const std::string msg = e.what();
    CHECK(msg.find("triples.jsonl") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
}

TEST_CASE("record counts must match the manifest") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  std::string docs = read_file(dir.file("documents.jsonl"));
  docs = docs.substr(docs.find('\n') + 1);  // drop the first record
  write_file(dir.file("documents.jsonl"), docs);

  try {
    kgrag::load_index(dir.str());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Corrupt);
    CHECK(std::string(e.what()).find("documents.jsonl") != std::string::npos);
  }
}

TEST_CASE("a missing index directory is an io error") {
  try {
    kgrag::load_index("/nonexistent/index/dir");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("a triple pointing at a missing document is corrupt") {
  const auto graph = build_fixture_graph();
  TempDir dir;
  kgrag::save_index(graph, dir.str());

  std::string triples = read_file(dir.file("triples.jsonl"));
  const auto first_newline = triples.find('\n');
  json first = json::parse(triples.substr(0, first_newline));
  first["source_doc"] = "zzz";
  write_file(dir.file("triples.jsonl"), first.dump() + triples.substr(first_newline));

  try {
    kgrag::load_index(dir.str());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Corrupt);
    CHECK(std::string(e.what()).find("zzz") != std::string::npos);
  }
}
