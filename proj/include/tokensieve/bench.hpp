#pragma once

// Ablation and comparison harness over synthetic bundles.

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokensieve/bundle.hpp"
#include "tokensieve/scheduler.hpp"

namespace tokensieve {

enum class AblationMetric { recall, processed_groups, runtime };

std::string to_string(AblationMetric metric);
AblationMetric ablation_metric_from_string(const std::string& text);

/// A list of grid cells; each cell is a set of config-key overrides.
struct ParameterGrid {
  std::vector<nlohmann::json> cells;

  /// Cartesian product of {key: [values...]} in key order.
  static ParameterGrid cartesian(const nlohmann::json& axes);
  /// Accepts either an object of value lists (cartesian) or an array of
  /// override objects (explicit cells). Keys are checked against the config.
  static ParameterGrid from_json(const nlohmann::json& doc);
};

struct AblationRow {
  std::size_t cell = 0;
  std::size_t bundle = 0;
  nlohmann::json settings;
  double recall = 0.0;  // NaN when the bundle has no planted tokens
  std::size_t groups_processed = 0;
  std::size_t groups_total = 0;
  double runtime_ms = 0.0;
  double value = 0.0;  // the requested metric
};

/// One row per grid cell x bundle, cells in grid order, bundles in input
/// order. An empty grid yields one baseline row per bundle.
std::vector<AblationRow> run_ablation(const ParameterGrid& grid, std::span<const TraceBundle> bundles,
                                      AblationMetric metric, const PipelineConfig& base);

nlohmann::json ablation_to_json(std::span<const AblationRow> rows);

/// Over-selection sweep: allocation.overselect_rate in {0.05, 0.1, 0.2, 0.3}.
ParameterGrid removal_rate_grid();

/// Eight (entropy threshold, group threshold) cells of the early-stop sweep,
/// with early stopping switched on.
ParameterGrid early_stop_grid();

/// Additive component presets: group-wise top-k under uniform budgets, then
/// certainty-weighted global allocation, then redundancy removal.
std::vector<std::pair<std::string, nlohmann::json>> component_presets();

struct VotingRow {
  std::string method;
  double accuracy = 0.0;
};

/// Accuracy of majority / weighted / Borda voting against each bundle's
/// ground-truth answer, plus mean planted-token recall of the full pipeline
/// (reported under method "pipeline_recall"; NaN without ground truth).
std::vector<VotingRow> compare_voting(std::span<const TraceBundle> bundles, const PipelineConfig& config,
                                      double borda_exponent = kDefaultBordaExponent);

/// Per-group answers and certainties used for voting.
std::vector<VoteEntry> vote_entries(const TraceBundle& bundle, const CertaintyConfig& certainty);

}  // namespace tokensieve
