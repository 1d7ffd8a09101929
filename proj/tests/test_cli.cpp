#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ose::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kFullGrid = std::string(OSE_SOURCE_DIR) + "/configs/full_grid.json";

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::path(OSE_BINARY_DIR) / name;
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST_CASE("enumerate") {
  auto r = run({"enumerate", "--config", kFullGrid, "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["count"] == 300);

  r = run({"enumerate", "--config", kFullGrid});
  CHECK(r.out.find("count: 300 valid of 360") != std::string::npos);

  r = run({"enumerate", "--set", "depths=[4]", "--set", "heads=[8]", "--set",
           "hiddens=[1024]", "--set", "intermediates=[768]", "--format", "json"});
  CHECK(nlohmann::json::parse(r.out)["count"] == 1);

  r = run({"enumerate", "--set", "depths=[2]", "--set", "heads=[12]", "--set",
           "hiddens=[512]", "--set", "intermediates=[256]", "--format", "json"});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["count"] == 0);
}

TEST_CASE("cost") {
  auto r = run({"cost", "--arch", "24,16,1024,4096", "--format", "json"});
  REQUIRE(r.code == 0);
  auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["total_params"] == 355361792);
  CHECK_FALSE(doc.contains("note"));

  r = run({"cost", "--arch", "4,8,1024,768", "--format", "json"});
  doc = nlohmann::json::parse(r.out);
  CHECK(doc["total_flops"] == 62635008);
  CHECK(doc["total_params"] == 76161024);
  CHECK(doc.contains("note"));

  r = run({"cost", "--arch", "4,8,1024,768"});
  CHECK(r.out.find("note:") != std::string::npos);

  r = run({"cost", "--arch", "3,8,512,256"});
  CHECK(r.code == 2);
  CHECK(r.err.find("depth must be even") != std::string::npos);
  CHECK(r.out.empty());

  CHECK(run({"cost"}).code == 2);
}

TEST_CASE("rank") {
  auto r = run({"rank", "--config", kFullGrid, "--format", "json"});
  REQUIRE(r.code == 0);
  auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["ranked"].size() == 300);
  double best = doc["ranked"][0]["w"];
  for (const auto& row : doc["ranked"]) CHECK(row["w"].get<double>() <= best);
  CHECK(run({"rank", "--config", kFullGrid, "--format", "json"}).out == r.out);

  r = run({"rank", "--config", kFullGrid, "--top-k", "3"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty() && line[0] != '#' && line.find("rank") == std::string::npos) ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("rank in ingested mode") {
  const auto data = write_file(
      "cli_measurements.jsonl",
      "{\"arch\":[4,8,1024,768],\"latency_s\":0.308,\"error\":1.0,\"trials\":6250}\n"
      "{\"arch\":[4,16,1024,512],\"latency_s\":0.314,\"error\":1.0,\"trials\":6250}\n"
      "{\"arch\":[4,8,1024,512],\"latency_s\":0.318,\"error\":1.0,\"trials\":6250}\n"
      "{\"arch\":[24,16,1024,4096],\"latency_s\":6.170,\"error\":1.0,\"trials\":6250}\n");
  const std::vector<std::string> base{
      "rank", "--set", "metric_mode=ingested", "--set", "epsilon=1",
      "--set", "depths=[4]", "--set", "heads=[8,16]", "--set", "hiddens=[1024]",
      "--set", "intermediates=[512,768]", "--measurements", data, "--format", "json"};
  auto r = run(base);
  CHECK(r.code == 3);
  CHECK(r.err.find("<4,16,1024,768>") != std::string::npos);

  auto narrowed = base;
  narrowed.insert(narrowed.end(), {"--set", "heads=[8]"});
  r = run(narrowed);
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["ranked"].size() == 2);
  CHECK(doc["provenance"]["i_unit"] == "seconds_per_sample");

  const auto bad = write_file("cli_bad.jsonl", "{\"arch\":[4,8,1024,768]}\n");
  auto broken = narrowed;
  broken[broken.size() - 5] = bad;
  CHECK(run(broken).code == 3);
}

TEST_CASE("toy-forward") {
  std::string tokens;
  for (int i = 0; i < 16; ++i) tokens += std::to_string((i * 7) % 32) + "\n";
  const auto path = write_file("cli_tokens.txt", tokens);
  auto r = run({"toy-forward", "--input", path, "--seed", "3"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["shape"] == nlohmann::json::array({2, 8, 8}));
  CHECK(doc["instantiated_params"] == 1696);
  CHECK(doc["param_count"] == 1696);
  CHECK(doc["min"].get<double>() >= -1.0);
  CHECK(doc["max"].get<double>() <= 1.0);
  CHECK(doc["softmax_row_sum_max_deviation"].get<double>() <= 1e-9);
  CHECK(run({"toy-forward", "--input", path, "--seed", "3"}).out == r.out);

  const auto bad = write_file("cli_bad_tokens.txt", "1\n2\nabc\n");
  r = run({"toy-forward", "--input", bad});
  CHECK(r.code == 3);
  CHECK(r.err.find("line 3") != std::string::npos);

  std::string big;
  for (int i = 0; i < 8; ++i) big += (i == 5 ? "99" : "1") + std::string("\n");
  r = run({"toy-forward", "--input", write_file("cli_big_tokens.txt", big)});
  CHECK(r.code == 3);
  CHECK(r.err.find("position 5") != std::string::npos);
}

TEST_CASE("verify") {
  const auto r = run({"verify"});
  CHECK(r.code == 0);
  CHECK(r.out.find("9 of 9 checks passed") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"rank", "--set", "nonsense=1"}).code == 2);
  CHECK(run({"rank", "--format", "xml"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}
