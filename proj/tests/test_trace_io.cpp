#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "tokensieve/synthetic.hpp"
#include "tokensieve/trace_io.hpp"

using namespace tokensieve;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tokensieve-io-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

NeedleScenario small(std::uint64_t seed) {
  NeedleScenario s;
  s.groups = 3;
  s.frames_per_group = 2;
  s.tokens_per_frame = 3;
  s.feature_dim = 4;
  s.heads = 2;
  s.response_steps = 5;
  s.vocabulary = 16;
  s.needle_groups = {1};
  s.needle_tokens_per_group = 2;
  s.seed = seed;
  return s;
}

nlohmann::json load(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

void save(const nlohmann::json& j, const fs::path& p) { std::ofstream(p) << j.dump(1); }

std::string read_error(const fs::path& p) {
  try {
    (void)read_trace_bundle(p);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("trace_io") {

TEST_CASE("bundles round-trip exactly") {
  TempDir dir;
  for (auto mode : {AttentionMode::query_key, AttentionMode::tensor}) {
    for (auto strategy : {GroupingStrategy::marginal, GroupingStrategy::chunk}) {
      auto s = small(3);
      s.attention_mode = mode;
      s.strategy = strategy;
      s.n_frames = 5;
      const auto bundle = gen_needle_bundle(s);
      const auto path = dir.path / "b.json";
      write_trace_bundle(bundle, path);
      CHECK(fs::exists(dir.path / "b.bin"));
      const auto back = read_trace_bundle(path);
      CHECK(back == bundle);
      CHECK(scenario_from_json(back.manifest.scenario).n_frames == 5);
    }
  }
}

TEST_CASE("writing the same bundle twice gives identical files") {
  TempDir dir;
  const auto bundle = gen_needle_bundle(small(4));
  write_trace_bundle(bundle, dir.path / "a.json");
  write_trace_bundle(gen_needle_bundle(small(4)), dir.path / "b.json");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir.path / "a.bin") == slurp(dir.path / "b.bin"));
  auto a = load(dir.path / "a.json");
  auto b = load(dir.path / "b.json");
  a.erase("payload");
  b.erase("payload");
  CHECK(a == b);
}

TEST_CASE("manifest problems are reported") {
  TempDir dir;
  const auto path = dir.path / "b.json";
  write_trace_bundle(gen_needle_bundle(small(5)), path);
  const auto good = load(path);

  auto doc = good;
  doc["format_version"] = 7;
  save(doc, path);
  auto msg = read_error(path);
  CHECK(msg.find("format_version 7") != std::string::npos);
  CHECK(msg.find("expected 1") != std::string::npos);

  doc = good;
  doc["groups"][2]["V"] = 7;
  save(doc, path);
  CHECK(read_error(path).find("group 2") != std::string::npos);

  doc = good;
  doc["groups"][1]["token_frame_indices"].erase(0);
  save(doc, path);
  msg = read_error(path);
  CHECK(msg.find("group 1") != std::string::npos);
  CHECK(msg.find("declared V=6 but 5 token records") != std::string::npos);

  doc = good;
  doc["groups"][0]["offset"] = 1u << 30;
  save(doc, path);
  CHECK(read_error(path).find("exceeds payload size") != std::string::npos);

  doc = good;
  doc.erase("D");
  save(doc, path);
  CHECK(read_error(path).find("'D'") != std::string::npos);

  doc = good;
  doc["planted"] = {{1, 99}};
  save(doc, path);
  CHECK(read_error(path).find("planted token") != std::string::npos);

  std::ofstream(path) << "{ not json";
  CHECK(read_error(path).find("not valid JSON") != std::string::npos);

  CHECK(read_error(dir.path / "missing.json").find("missing.json") != std::string::npos);
}

TEST_CASE("payload problems are reported") {
  TempDir dir;
  const auto path = dir.path / "b.json";
  const auto payload = dir.path / "b.bin";
  const auto bundle = gen_needle_bundle(small(6));
  write_trace_bundle(bundle, path);
  const auto size = fs::file_size(payload);

  fs::resize_file(payload, size - 4);
  CHECK(read_error(path).find("truncated") != std::string::npos);

  // A NaN in the first probability of group 0.
  write_trace_bundle(bundle, path);
  {
    std::fstream f(payload, std::ios::in | std::ios::out | std::ios::binary);
    const unsigned char nan[4] = {0x00, 0x00, 0xC0, 0x7F};
    f.write(reinterpret_cast<const char*>(nan), 4);
  }
  const auto msg = read_error(path);
  CHECK(msg.find("group 0") != std::string::npos);
  CHECK(msg.find("non-finite") != std::string::npos);

  // A probability row that no longer sums to one.
  write_trace_bundle(bundle, path);
  {
    std::fstream f(payload, std::ios::in | std::ios::out | std::ios::binary);
    const float big = 0.9f;
    f.write(reinterpret_cast<const char*>(&big), 4);
  }
  CHECK(read_error(path).find("normalization") != std::string::npos);

  fs::remove(payload);
  CHECK(read_error(path).find("b.bin") != std::string::npos);
}

TEST_CASE("invalid traces are not written") {
  TempDir dir;
  auto bundle = gen_needle_bundle(small(7));
  bundle.groups[1].tokens[0].normalized_time = 2.0;
  CHECK_THROWS_AS(write_trace_bundle(bundle, dir.path / "x.json"), FormatError);
}

TEST_CASE("selection results round-trip") {
  TempDir dir;
  const auto bundle = gen_needle_bundle(small(8));
  PipelineConfig c;
  c.allocation.budget_tokens = 7;
  c.early_stopping = true;
  c.group_threshold = 1;
  const auto result = run_pipeline(bundle, c);
  const auto path = dir.path / "r.json";
  write_selection_result(result, path);
  CHECK(read_selection_result(path) == result);

  auto doc = load(path);
  doc["format_version"] = 2;
  save(doc, path);
  CHECK_THROWS_WITH_AS(read_selection_result(path), doctest::Contains("format_version 2"), FormatError);

  doc = selection_result_to_json(result);
  doc["selected"][0].erase("token_index");
  save(doc, path);
  CHECK_THROWS_AS(read_selection_result(path), FormatError);
  CHECK_THROWS_AS(read_selection_result(dir.path / "none.json"), FormatError);
}

TEST_CASE("config keys") {
  const auto loaded = config_from_json(nlohmann::json::parse(R"({
    "allocation": {"tau": 1.5, "budget_tokens": 64},
    "scheduler.early_stopping": true,
    "grouping.strategy": "chunk"
  })"));
  CHECK(loaded.config.allocation.tau == 1.5);
  CHECK(loaded.config.allocation.budget_tokens == 64);
  CHECK(loaded.config.early_stopping);
  CHECK(loaded.config.grouping.strategy == GroupingStrategy::chunk);
  CHECK(loaded.keys.contains("allocation.tau"));
  CHECK_FALSE(loaded.keys.contains("redundancy.sigma"));

  CHECK_THROWS_WITH_AS(config_from_json(nlohmann::json::parse(R"({"allocation.temperature": 2})")),
                       doctest::Contains("allocation.temperature"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"redundancy": {"sigma": "wide"}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"allocation": {"tau": 1}, "allocation.tau": 2})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"([1, 2])")), std::invalid_argument);

  PipelineConfig c;
  c.redundancy.sigma = 0.5;
  c.certainty.measure = CertaintyMeasure::kl_uniform;
  c.allocation.budget_frames = 12;
  const auto back = config_from_json(config_to_json(c)).config;
  CHECK(back.redundancy.sigma == 0.5);
  CHECK(back.certainty.measure == CertaintyMeasure::kl_uniform);
  CHECK(back.allocation.budget_frames == 12);
  CHECK(config_keys().size() == 13);
}

TEST_CASE("config files") {
  TempDir dir;
  std::ofstream(dir.path / "c.json") << R"({"scheduler": {"group_threshold": 2}})";
  CHECK(read_config(dir.path / "c.json").config.group_threshold == 2);
  std::ofstream(dir.path / "bad.json") << R"({"scheduler": {"patience": 2}})";
  CHECK_THROWS_AS(read_config(dir.path / "bad.json"), FormatError);
}

}
