#pragma once

// Per-group token budgets from group certainties:
//   B_g = B * softmax(C / tau)_g
// rounded to integers that sum to B exactly and never exceed a group's
// token count.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tokensieve/core.hpp"

namespace tokensieve {

inline constexpr double kDefaultTemperature = 2.0;
inline constexpr double kDefaultOverselectRate = 0.1;

struct AllocationConfig {
  double tau = kDefaultTemperature;
  /// Global budget in tokens. Takes precedence over budget_frames.
  std::optional<std::int64_t> budget_tokens;
  /// Global budget in frame equivalents (frames x tokens per frame).
  std::optional<std::int64_t> budget_frames;
  double overselect_rate = kDefaultOverselectRate;
};

/// Resolves the configured budget to a token count.
std::int64_t resolve_budget(const AllocationConfig& config, std::int64_t tokens_per_frame);

/// softmax(values / tau), computed with the maximum subtracted.
std::vector<double> softmax_weights(std::span<const double> values, double tau);

/// Budgets for groups 0..G-1 (keys of the returned map are positions in
/// `certainties`). Throws std::invalid_argument if the capacities cannot
/// hold `budget`.
BudgetAllocation allocate_budgets(std::span<const double> certainties, std::int64_t budget,
                                  double tau, std::span<const std::int64_t> capacities);

/// Indices of the `count` highest scores, ties to the lower index, returned
/// in ascending index order.
std::vector<std::size_t> select_top_tokens(std::span<const double> scores, std::size_t count);

/// Same as above, checking that `scores` covers every token of `group`.
std::vector<std::size_t> select_top_tokens(const GroupTrace& group, std::span<const double> scores,
                                           std::size_t count);

/// min(capacity_g, ceil(B_g * (1 + rate))) for every group of `allocation`.
/// `capacities` is keyed by group id.
std::map<int, std::int64_t> overselect_counts(const BudgetAllocation& allocation, double rate,
                                              const std::map<int, std::int64_t>& capacities);

}  // namespace tokensieve
