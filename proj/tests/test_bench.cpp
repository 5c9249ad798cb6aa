#include <doctest.h>

#include <cmath>

#include "tokensieve/bench.hpp"
#include "tokensieve/synthetic.hpp"

using namespace tokensieve;
using nlohmann::json;

namespace {

TraceBundle bundle_for(std::uint64_t seed, std::set<int> needles = {0, 4, 2}) {
  NeedleScenario s;
  s.groups = 8;
  s.frames_per_group = 4;
  s.tokens_per_frame = 4;
  s.feature_dim = 16;
  s.heads = 2;
  s.needle_groups = std::move(needles);
  s.needle_tokens_per_group = 3;
  s.seed = seed;
  return gen_needle_bundle(s);
}

PipelineConfig base() {
  PipelineConfig c;
  c.allocation.budget_tokens = 24;
  return c;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("grids") {
  const auto g = ParameterGrid::cartesian({{"allocation.tau", {1.0, 2.0}}, {"redundancy.sigma", {0.1, 0.3, 0.5}}});
  CHECK(g.cells.size() == 6);
  CHECK(g.cells[1] == json{{"allocation.tau", 1.0}, {"redundancy.sigma", 0.3}});
  CHECK(ParameterGrid::from_json(json::object()).cells.empty());
  CHECK(ParameterGrid::from_json(json::array({{{"allocation.tau", 3.0}}})).cells.size() == 1);
  CHECK_THROWS_AS(ParameterGrid::from_json({{"allocation.temperature", {1.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(ParameterGrid::from_json(json::array({{{"bogus", 1}}})), std::invalid_argument);
  CHECK_THROWS_AS(ParameterGrid::from_json({{"allocation.tau", json::array()}}), std::invalid_argument);
  CHECK_THROWS_AS(ParameterGrid::from_json(json(3)), std::invalid_argument);
}

TEST_CASE("removal rate sweep gives one row per rate") {
  const std::vector<TraceBundle> bundles{bundle_for(1)};
  const auto rows = run_ablation(removal_rate_grid(), bundles, AblationMetric::recall, base());
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    CHECK(r.groups_total == 8);
  }
  CHECK(rows[2].settings == json{{"allocation.overselect_rate", 0.2}});
}

TEST_CASE("early stop sweep gives eight rows") {
  const std::vector<TraceBundle> bundles{bundle_for(2)};
  const auto grid = early_stop_grid();
  REQUIRE(grid.cells.size() == 8);
  const auto rows = run_ablation(grid, bundles, AblationMetric::processed_groups, base());
  REQUIRE(rows.size() == 8);
  // Group threshold 1 stops after the first confident group.
  CHECK(rows[0].value == 1.0);
  CHECK(rows[5].value == 3.0);
  for (const auto& r : rows) CHECK(r.value == static_cast<double>(r.groups_processed));
  const auto doc = ablation_to_json(rows);
  CHECK(doc.size() == 8);
  CHECK(doc[0].contains("runtime_ms"));
}

TEST_CASE("empty grid is a single baseline row per bundle") {
  const std::vector<TraceBundle> bundles{bundle_for(3), bundle_for(4)};
  const auto rows = run_ablation(ParameterGrid{}, bundles, AblationMetric::runtime, base());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].settings == json::object());
  CHECK(rows[1].bundle == 1);
  CHECK(rows[0].value == rows[0].runtime_ms);
}

TEST_CASE("recall is missing without ground truth") {
  auto b = bundle_for(5);
  b.manifest.planted.clear();
  const std::vector<TraceBundle> bundles{b};
  const auto rows = run_ablation(ParameterGrid{}, bundles, AblationMetric::recall, base());
  CHECK(std::isnan(rows[0].recall));
  CHECK(ablation_to_json(rows)[0]["recall"].is_null());
}

TEST_CASE("component presets are valid cells") {
  const auto presets = component_presets();
  CHECK(presets.size() == 3);
  json cells = json::array();
  for (const auto& [name, cell] : presets) cells.push_back(cell);
  const std::vector<TraceBundle> bundles{bundle_for(6)};
  CHECK(run_ablation(ParameterGrid::from_json(cells), bundles, AblationMetric::recall, base()).size() == 3);
}

TEST_CASE("voting comparison") {
  std::vector<TraceBundle> unanimous{bundle_for(7), bundle_for(8)};
  for (auto& b : unanimous) {
    for (auto& g : b.groups) g.answer_label = "A";
  }
  for (const auto& row : compare_voting(unanimous, base())) {
    if (row.method != "pipeline_recall") CHECK(row.accuracy == 1.0);
  }

  // Two confident needle groups are right; six uncertain groups agree on a
  // wrong answer. Certainty-weighted voting recovers the answer, majority
  // does not.
  std::vector<TraceBundle> hard;
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    auto b = bundle_for(seed, {1, 5});
    for (auto& g : b.groups) {
      if (g.group_id != 1 && g.group_id != 5) g.answer_label = "C";
    }
    hard.push_back(std::move(b));
  }
  std::map<std::string, double> acc;
  for (const auto& row : compare_voting(hard, base())) acc[row.method] = row.accuracy;
  CHECK(acc.at("majority") == 0.0);
  CHECK(acc.at("weighted") == 1.0);
  CHECK(acc.at("weighted") >= acc.at("majority"));
  CHECK(acc.at("pipeline_recall") >= 0.0);

  auto unlabeled = bundle_for(20);
  unlabeled.groups[3].answer_label.reset();
  const std::vector<TraceBundle> bad{unlabeled};
  CHECK_THROWS_WITH_AS(compare_voting(bad, base()), doctest::Contains("group 3"), std::invalid_argument);
}

TEST_CASE("borda agrees with the scheduler vote") {
  const std::vector<VoteEntry> e{{"A", -0.1}, {"B", -1.0}, {"B", -2.0}};
  CHECK(vote(e, VoteMethod::borda, kDefaultBordaExponent) == "B");
  CHECK(kDefaultBordaExponent == 0.9);
}

}
