#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokensieve/allocation.hpp"
#include "tokensieve/bundle.hpp"
#include "tokensieve/certainty.hpp"
#include "tokensieve/core.hpp"
#include "tokensieve/grouping.hpp"
#include "tokensieve/redundancy.hpp"

namespace tokensieve {

inline constexpr double kDefaultEntropyThreshold = 0.75;  // nats
inline constexpr int kDefaultGroupThreshold = 3;
inline constexpr double kDefaultBordaExponent = 0.9;

struct PipelineConfig {
  CertaintyConfig certainty;
  GroupingConfig grouping;
  AllocationConfig allocation;
  RedundancyConfig redundancy;
  double entropy_threshold = kDefaultEntropyThreshold;
  int group_threshold = kDefaultGroupThreshold;
  bool early_stopping = false;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// What the scheduler knows about one visited group.
struct ProcessedGroup {
  int group_id = 0;
  CertaintyScore certainty;  // under the configured measure
  double mean_bottom_entropy = 0.0;
};

/// Early-stopping state machine. Groups are committed in traversal order;
/// once `group_threshold` of them have a bottom-set entropy below the
/// threshold, the traversal stops.
class EarlyStopController {
 public:
  EarlyStopController(std::vector<int> traversal, double entropy_threshold, int group_threshold,
                      bool enabled);

  /// Group that must be committed next, or nullopt once stopped.
  std::optional<int> next_group() const;

  /// Records the next group in traversal order. Throws std::logic_error if
  /// `group_id` is not the expected group or the controller already stopped.
  void commit(int group_id, const CertaintyScore& certainty, double mean_bottom_entropy);

  bool stopped() const { return stopped_; }
  StopReason stop_reason() const { return stop_reason_; }
  int confident_count() const { return count_; }
  const std::vector<int>& traversal() const { return traversal_; }
  const std::vector<ProcessedGroup>& processed() const { return processed_; }

 private:
  std::vector<int> traversal_;
  double entropy_threshold_;
  int group_threshold_;
  bool enabled_;
  std::vector<ProcessedGroup> processed_;
  int count_ = 0;
  bool stopped_ = false;
  StopReason stop_reason_ = StopReason::all_groups_processed;
};

/// Runs the full selection over `traces` (one per group id 0..G-1), visiting
/// groups in `traversal`. `strategy` only changes how redundancy removal is
/// scoped: chunk reduces each group locally, the others pool globally.
SelectionResult run_pipeline(std::span<const GroupTrace> traces, std::span<const int> traversal,
                             GroupingStrategy strategy, std::int64_t budget,
                             const PipelineConfig& config);

/// Runs the pipeline over a bundle using the bundle's own grouping. The
/// budget is resolved from `config.allocation`; `traversal` overrides the
/// visiting order implied by the grouping strategy.
SelectionResult run_pipeline(const TraceBundle& bundle, const PipelineConfig& config,
                             std::optional<std::vector<int>> traversal = std::nullopt);

/// Tokens per frame of a bundle: the manifest value, or V / frames of the
/// first group when the manifest leaves it at 0.
std::int64_t tokens_per_frame_of(const TraceBundle& bundle);

enum class VoteMethod { majority, weighted, borda };

std::string to_string(VoteMethod method);
VoteMethod vote_method_from_string(const std::string& text);

struct VoteEntry {
  std::string label;
  double certainty = 0.0;
};

/// Aggregates per-group answers. Ties between labels go to the label of the
/// most certain group among the tied labels (then the earlier entry).
std::string vote(std::span<const VoteEntry> entries, VoteMethod method,
                 double borda_exponent = kDefaultBordaExponent);

}  // namespace tokensieve
