#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

using testsup::TempDir;
using testsup::fixture;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

RunResult run_cli(const std::string& args, const TempDir& scratch) {
  static int counter = 0;
  const std::string out_path = scratch.file("cli_out_" + std::to_string(counter));
  const std::string err_path = scratch.file("cli_err_" + std::to_string(counter));
  ++counter;

  const std::string cmd = shell_quote(KGRAG_CLI_PATH) + " " + args + " > " +
                          shell_quote(out_path) + " 2> " + shell_quote(err_path);
  const int raw = std::system(cmd.c_str());
  RunResult result;
  result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = testsup::read_file(out_path);
  result.err = testsup::read_file(err_path);
  return result;
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

// builds the fixture index into dir via the cli and returns the build stdout
std::string build_fixture_index(const TempDir& scratch, const std::string& dir) {
  const RunResult result = run_cli("build-index --corpus " +
                                       shell_quote(fixture("corpus10.jsonl")) + " --out " +
                                       shell_quote(dir) + " --k 2 --provider-config " +
                                       shell_quote(fixture("mock_providers.json")),
                                   scratch);
  REQUIRE(result.code == 0);
  return result.out;
}

nlohmann::json masked_context(const std::string& json_line) {
  auto doc = nlohmann::json::parse(json_line);
  doc["accounting"]["wall_ms"] = 0;
  return doc;
}

const char* kQuestion = "Who designed the Mira Vale Tramway?";

}  // namespace

TEST_CASE("help is help and bad usage exits 2") {
  TempDir scratch;
  const RunResult help = run_cli("--help", scratch);
  CHECK(help.code == 0);
  CHECK(help.out.find("build-index") != std::string::npos);
  CHECK(help.out.find("query") != std::string::npos);
  CHECK(help.out.find("eval") != std::string::npos);

  CHECK(run_cli("", scratch).code == 2);
  CHECK(run_cli("frobnicate", scratch).code == 2);

  const RunResult bad_strategy =
      run_cli("query --index /tmp/x 'q' --strategy bogus", scratch);
  CHECK(bad_strategy.code == 2);
  CHECK(bad_strategy.err.find("run with --help") != std::string::npos);

  CHECK(run_cli("query --index /tmp/x 'q' --preset nosuch", scratch).code == 2);
}

TEST_CASE("build, query and eval against the fixture corpus") {
  TempDir scratch;
  const std::string index_dir = scratch.file("index");
  const std::string build_out = build_fixture_index(scratch, index_dir);

  CHECK(build_out.find("index written to " + index_dir) != std::string::npos);
  CHECK(build_out.find("documents: 10") != std::string::npos);
  CHECK(build_out.find("edges: 20") != std::string::npos);
  CHECK(build_out.find("entities: 51") != std::string::npos);
  CHECK(build_out.find("triples: 53") != std::string::npos);
  CHECK(build_out.find("extraction cache: 0 hit(s), 10 miss(es)") != std::string::npos);
  CHECK(build_out.find("provider calls: 2 embedding, 10 completion") != std::string::npos);

  const std::string base = "query --index " + shell_quote(index_dir) + " " +
                           shell_quote(kQuestion) + " --provider-config " +
                           shell_quote(fixture("mock_providers.json"));

  const RunResult query = run_cli(base + " --lambda=-1 --t 5", scratch);
  REQUIRE(query.code == 0);
  const auto ctx = nlohmann::json::parse(first_line(query.out));
  CHECK(ctx.at("query") == kQuestion);
  CHECK(ctx.at("triples").size() == 5);
  CHECK(!ctx.at("candidates").empty());
  CHECK(ctx.at("accounting").at("embed_calls") == 1);
  CHECK(ctx.at("accounting").at("completion_calls") == 0);

  // same invocation, same context
  const RunResult rerun = run_cli(base + " --lambda=-1 --t 5", scratch);
  REQUIRE(rerun.code == 0);
  CHECK(masked_context(first_line(rerun.out)) == masked_context(first_line(query.out)));

  const RunResult generated = run_cli(base + " --generate", scratch);
  REQUIRE(generated.code == 0);
  const auto gen_ctx = nlohmann::json::parse(first_line(generated.out));
  CHECK(gen_ctx.at("accounting").at("completion_calls") == 1);
  const std::string expected_tail = std::string(kQuestion) + "\n";
  REQUIRE(generated.out.size() > expected_tail.size());
  CHECK(generated.out.substr(generated.out.size() - expected_tail.size()) == expected_tail);

  const RunResult eval = run_cli("eval --index " + shell_quote(index_dir) + " --qa " +
                                     shell_quote(fixture("qa3.jsonl")) +
                                     " --provider-config " +
                                     shell_quote(fixture("mock_providers.json")),
                                 scratch);
  REQUIRE(eval.code == 0);
  const auto report = nlohmann::json::parse(first_line(eval.out));
  CHECK(report.at("items").size() == 3);
  CHECK(eval.out.find("\nmean") != std::string::npos);
  CHECK(eval.out.find("q1") != std::string::npos);

  // --report diverts the json to a file, leaving only the table on stdout
  const std::string report_path = scratch.file("report.json");
  const RunResult eval_to_file =
      run_cli("eval --index " + shell_quote(index_dir) + " --qa " +
                  shell_quote(fixture("qa3.jsonl")) + " --report " +
                  shell_quote(report_path) + " --provider-config " +
                  shell_quote(fixture("mock_providers.json")),
              scratch);
  REQUIRE(eval_to_file.code == 0);
  CHECK(eval_to_file.out.find("aggregates") == std::string::npos);
  CHECK(eval_to_file.out.find("mean") != std::string::npos);
  const auto file_report = nlohmann::json::parse(testsup::read_file(report_path));
  CHECK(file_report.at("items").size() == 3);
  CHECK(file_report.at("failed_count") == 0);
}

TEST_CASE("a rebuild over the same directory hits the extraction cache") {
  TempDir scratch;
  const std::string index_dir = scratch.file("index");
  build_fixture_index(scratch, index_dir);
  const std::string second = build_fixture_index(scratch, index_dir);
  CHECK(second.find("extraction cache: 10 hit(s), 0 miss(es)") != std::string::npos);
  CHECK(second.find("provider calls: 2 embedding, 0 completion") != std::string::npos);
}

TEST_CASE("explicit flags beat config files beat presets") {
  TempDir scratch;
  const std::string index_dir = scratch.file("index");
  build_fixture_index(scratch, index_dir);

  const std::string config_path = scratch.file("params.json");
  testsup::write_file(config_path, R"({"t": 2, "lambda": -1.0})");

  const std::string base = "query --index " + shell_quote(index_dir) + " " +
                           shell_quote(kQuestion) + " --provider-config " +
                           shell_quote(fixture("mock_providers.json"));

  const RunResult from_config = run_cli(base + " --config " + shell_quote(config_path),
                                        scratch);
  REQUIRE(from_config.code == 0);
  CHECK(nlohmann::json::parse(first_line(from_config.out)).at("triples").size() == 2);

  const RunResult flag_wins =
      run_cli(base + " --config " + shell_quote(config_path) + " --t 1", scratch);
  REQUIRE(flag_wins.code == 0);
  CHECK(nlohmann::json::parse(first_line(flag_wins.out)).at("triples").size() == 1);

  const RunResult from_preset = run_cli(base + " --preset crud1 --lambda=-1", scratch);
  REQUIRE(from_preset.code == 0);
  CHECK(nlohmann::json::parse(first_line(from_preset.out)).at("triples").size() == 10);

  const RunResult preset_overridden =
      run_cli(base + " --preset crud1 --lambda=-1 --t 3", scratch);
  REQUIRE(preset_overridden.code == 0);
  CHECK(nlohmann::json::parse(first_line(preset_overridden.out)).at("triples").size() == 3);

  const std::string bad_config = scratch.file("bad.json");
  testsup::write_file(bad_config, R"({"tt": 2})");
  const RunResult unknown_key = run_cli(base + " --config " + shell_quote(bad_config),
                                        scratch);
  CHECK(unknown_key.code == 2);
  CHECK(unknown_key.err.find("unknown key") != std::string::npos);
}

TEST_CASE("runtime failures exit 1, misuse exits 2") {
  TempDir scratch;
  const RunResult missing_corpus =
      run_cli("build-index --corpus /kgrag-no-such-file.jsonl --out " +
                  shell_quote(scratch.file("out")),
              scratch);
  CHECK(missing_corpus.code == 1);
  CHECK(missing_corpus.err.find("error:") != std::string::npos);

  const RunResult missing_index =
      run_cli("query --index /kgrag-no-such-dir 'q'", scratch);
  CHECK(missing_index.code == 1);

  const std::string index_dir = scratch.file("index");
  build_fixture_index(scratch, index_dir);
  const RunResult blank_question =
      run_cli("query --index " + shell_quote(index_dir) + " '   '", scratch);
  CHECK(blank_question.code == 2);

  const RunResult missing_qa = run_cli("eval --index " + shell_quote(index_dir) +
                                           " --qa /kgrag-no-such-qa.jsonl",
                                       scratch);
  CHECK(missing_qa.code == 1);
}
