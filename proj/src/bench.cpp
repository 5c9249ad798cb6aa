#include "tokensieve/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tokensieve/synthetic.hpp"
#include "tokensieve/trace_io.hpp"

namespace tokensieve {

using nlohmann::json;

std::string to_string(AblationMetric metric) {
  switch (metric) {
    case AblationMetric::recall: return "recall";
    case AblationMetric::processed_groups: return "processed_groups";
    case AblationMetric::runtime: return "runtime";
  }
  return "unknown";
}

AblationMetric ablation_metric_from_string(const std::string& text) {
  if (text == "recall") return AblationMetric::recall;
  if (text == "processed_groups") return AblationMetric::processed_groups;
  if (text == "runtime") return AblationMetric::runtime;
  throw std::invalid_argument("unknown metric '" + text + "'");
}

namespace {

void check_keys(const json& cell) {
  PipelineConfig probe;
  for (const auto& [key, value] : cell.items()) apply_config_value(probe, key, value);
}

}  // namespace

ParameterGrid ParameterGrid::cartesian(const json& axes) {
  if (!axes.is_object()) throw std::invalid_argument("grid axes must be an object of value lists");
  ParameterGrid grid;
  if (axes.empty()) return grid;
  grid.cells.push_back(json::object());
  for (const auto& [key, values] : axes.items()) {
    if (!values.is_array() || values.empty()) {
      throw std::invalid_argument("grid key '" + key + "' needs a non-empty list of values");
    }
    std::vector<json> next;
    for (const auto& cell : grid.cells) {
      for (const auto& v : values) {
        json c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    grid.cells = std::move(next);
  }
  for (const auto& c : grid.cells) check_keys(c);
  return grid;
}

ParameterGrid ParameterGrid::from_json(const json& doc) {
  if (doc.is_object()) return cartesian(doc);
  if (!doc.is_array()) throw std::invalid_argument("grid must be an object or an array of cells");
  ParameterGrid grid;
  for (const auto& cell : doc) {
    if (!cell.is_object()) throw std::invalid_argument("grid cells must be objects");
    check_keys(cell);
    grid.cells.push_back(cell);
  }
  return grid;
}

std::vector<AblationRow> run_ablation(const ParameterGrid& grid, std::span<const TraceBundle> bundles,
                                      AblationMetric metric, const PipelineConfig& base) {
  std::vector<json> cells = grid.cells;
  if (cells.empty()) cells.push_back(json::object());

  std::vector<AblationRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    PipelineConfig config = base;
    for (const auto& [key, value] : cells[c].items()) apply_config_value(config, key, value);
    config.validate();
    for (std::size_t b = 0; b < bundles.size(); ++b) {
      const auto start = std::chrono::steady_clock::now();
      const SelectionResult result = run_pipeline(bundles[b], config);
      const auto stop = std::chrono::steady_clock::now();

      AblationRow row;
      row.cell = c;
      row.bundle = b;
      row.settings = cells[c];
      row.recall = bundles[b].manifest.planted.empty()
                       ? std::numeric_limits<double>::quiet_NaN()
                       : recall_of_planted(result, bundles[b].manifest);
      row.groups_processed = result.metadata.groups_processed.size();
      row.groups_total = result.metadata.groups_total;
      row.runtime_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      switch (metric) {
        case AblationMetric::recall: row.value = row.recall; break;
        case AblationMetric::processed_groups: row.value = static_cast<double>(row.groups_processed); break;
        case AblationMetric::runtime: row.value = row.runtime_ms; break;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

json ablation_to_json(std::span<const AblationRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"cell", r.cell},
                   {"bundle", r.bundle},
                   {"settings", r.settings},
                   {"recall", std::isnan(r.recall) ? json(nullptr) : json(r.recall)},
                   {"groups_processed", r.groups_processed},
                   {"groups_total", r.groups_total},
                   {"runtime_ms", r.runtime_ms},
                   {"value", std::isnan(r.value) ? json(nullptr) : json(r.value)}});
  }
  return out;
}

ParameterGrid removal_rate_grid() {
  return ParameterGrid::cartesian({{"allocation.overselect_rate", {0.05, 0.1, 0.2, 0.3}}});
}

ParameterGrid early_stop_grid() {
  const std::pair<double, int> cells[] = {{0.6, 1},  {0.7, 1},  {0.7, 2}, {0.75, 1},
                                          {0.75, 2}, {0.75, 3}, {0.8, 3}, {0.8, 4}};
  ParameterGrid grid;
  for (auto [entropy, groups] : cells) {
    grid.cells.push_back({{"scheduler.early_stopping", true},
                          {"scheduler.entropy_threshold", entropy},
                          {"scheduler.group_threshold", groups}});
  }
  return grid;
}

std::vector<std::pair<std::string, json>> component_presets() {
  return {
      {"group_topk_uniform", {{"allocation.tau", 1e9}, {"redundancy.enabled", false}}},
      {"global_allocation", {{"allocation.tau", kDefaultTemperature}, {"redundancy.enabled", false}}},
      {"global_allocation_redundancy",
       {{"allocation.tau", kDefaultTemperature}, {"redundancy.enabled", true}}},
  };
}

std::vector<VoteEntry> vote_entries(const TraceBundle& bundle, const CertaintyConfig& certainty) {
  std::vector<VoteEntry> entries;
  for (const auto& g : bundle.groups) {
    if (!g.answer_label) {
      throw std::invalid_argument("group " + std::to_string(g.group_id) + " has no answer label");
    }
    entries.push_back({*g.answer_label, response_certainty(g.response, certainty).value});
  }
  return entries;
}

std::vector<VotingRow> compare_voting(std::span<const TraceBundle> bundles, const PipelineConfig& config,
                                      double borda_exponent) {
  if (bundles.empty()) throw std::invalid_argument("no bundles to compare");
  std::vector<VotingRow> rows;
  for (VoteMethod method : {VoteMethod::majority, VoteMethod::weighted, VoteMethod::borda}) {
    std::size_t correct = 0;
    for (const auto& b : bundles) {
      if (!b.manifest.ground_truth_answer) throw std::invalid_argument("bundle has no ground-truth answer");
      const auto entries = vote_entries(b, config.certainty);
      if (vote(entries, method, borda_exponent) == *b.manifest.ground_truth_answer) ++correct;
    }
    rows.push_back({to_string(method), static_cast<double>(correct) / static_cast<double>(bundles.size())});
  }
  double recall = 0.0;
  bool have_truth = true;
  for (const auto& b : bundles) {
    if (b.manifest.planted.empty()) {
      have_truth = false;
      break;
    }
    recall += recall_of_planted(run_pipeline(b, config), b.manifest);
  }
  rows.push_back({"pipeline_recall", have_truth ? recall / static_cast<double>(bundles.size())
                                                : std::numeric_limits<double>::quiet_NaN()});
  return rows;
}

}  // namespace tokensieve
