#include "tokensieve/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tokensieve {

std::int64_t resolve_budget(const AllocationConfig& config, std::int64_t tokens_per_frame) {
  if (config.budget_tokens) {
    if (*config.budget_tokens < 0) throw std::invalid_argument("token budget must be non-negative");
    return *config.budget_tokens;
  }
  if (config.budget_frames) {
    if (*config.budget_frames < 0) throw std::invalid_argument("frame budget must be non-negative");
    if (tokens_per_frame < 1) {
      throw std::invalid_argument("frame-equivalent budget needs a positive tokens-per-frame count");
    }
    return *config.budget_frames * tokens_per_frame;
  }
  throw std::invalid_argument("no budget configured (set allocation.budget_tokens or "
                              "allocation.budget_frames)");
}

std::vector<double> softmax_weights(std::span<const double> values, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (values.empty()) return {};
  const double peak = *std::max_element(values.begin(), values.end());
  std::vector<double> w(values.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    w[i] = std::exp((values[i] - peak) / tau);
    norm += w[i];
  }
  for (double& x : w) x /= norm;
  return w;
}

BudgetAllocation allocate_budgets(std::span<const double> certainties, std::int64_t budget,
                                  double tau, std::span<const std::int64_t> capacities) {
  const std::size_t groups = certainties.size();
  if (groups == 0) throw std::invalid_argument("allocation needs at least one group");
  if (capacities.size() != groups) {
    throw std::invalid_argument("one capacity per group is required");
  }
  if (budget < 0) throw std::invalid_argument("budget must be non-negative");
  if (std::any_of(capacities.begin(), capacities.end(), [](std::int64_t c) { return c < 0; })) {
    throw std::invalid_argument("capacities must be non-negative");
  }
  if (std::any_of(certainties.begin(), certainties.end(),
                  [](double c) { return !std::isfinite(c); })) {
    throw std::invalid_argument("certainties must be finite");
  }
  const std::int64_t available = std::accumulate(capacities.begin(), capacities.end(),
                                                 std::int64_t{0});
  if (available < budget) {
    throw std::invalid_argument("budget exceeds available tokens (" + std::to_string(budget) +
                                " > " + std::to_string(available) + ")");
  }

  const auto weights = softmax_weights(certainties, tau);
  std::vector<double> ideal(groups);
  std::vector<std::int64_t> assigned(groups);
  std::int64_t handed_out = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    ideal[g] = static_cast<double>(budget) * weights[g];
    assigned[g] = static_cast<std::int64_t>(std::floor(ideal[g]));
    handed_out += assigned[g];
  }

  // Largest remainder; stable sort keeps the lower group id first on ties.
  std::vector<std::size_t> by_remainder(groups);
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(), [&](std::size_t a, std::size_t b) {
    return ideal[a] - std::floor(ideal[a]) > ideal[b] - std::floor(ideal[b]);
  });
  // Floating-point rounding can leave the floors summing to slightly more or
  // less than budget - groups; both directions are handled here.
  for (std::size_t i = 0; handed_out < budget; i = (i + 1) % groups) {
    ++assigned[by_remainder[i]];
    ++handed_out;
  }
  for (std::size_t i = groups; handed_out > budget;) {
    i = (i == 0 ? groups : i) - 1;
    if (assigned[by_remainder[i]] > 0) {
      --assigned[by_remainder[i]];
      --handed_out;
    }
  }

  std::int64_t overflow = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    if (assigned[g] > capacities[g]) {
      overflow += assigned[g] - capacities[g];
      assigned[g] = capacities[g];
    }
  }
  // Spill one token at a time to the open group that is furthest below its
  // ideal share.
  while (overflow > 0) {
    std::size_t best = groups;
    double best_gap = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      if (assigned[g] >= capacities[g]) continue;
      const double gap = ideal[g] - static_cast<double>(assigned[g]);
      if (best == groups || gap > best_gap) {
        best = g;
        best_gap = gap;
      }
    }
    ++assigned[best];
    --overflow;
  }

  BudgetAllocation out;
  out.total = budget;
  for (std::size_t g = 0; g < groups; ++g) out.per_group[static_cast<int>(g)] = assigned[g];
  return out;
}

std::vector<std::size_t> select_top_tokens(std::span<const double> scores, std::size_t count) {
  if (count > scores.size()) {
    throw std::invalid_argument("cannot select " + std::to_string(count) + " tokens out of " +
                                std::to_string(scores.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> select_top_tokens(const GroupTrace& group, std::span<const double> scores,
                                           std::size_t count) {
  if (scores.size() != group.tokens.size()) {
    throw std::invalid_argument("group " + std::to_string(group.group_id) + " has " +
                                std::to_string(group.tokens.size()) + " tokens but " +
                                std::to_string(scores.size()) + " relevance scores");
  }
  return select_top_tokens(scores, count);
}

std::map<int, std::int64_t> overselect_counts(const BudgetAllocation& allocation, double rate,
                                              const std::map<int, std::int64_t>& capacities) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("overselect rate must lie in [0, 1]");
  std::map<int, std::int64_t> counts;
  for (const auto& [group, budget] : allocation.per_group) {
    auto cap = capacities.find(group);
    if (cap == capacities.end()) {
      throw std::invalid_argument("no capacity given for group " + std::to_string(group));
    }
    // Slack keeps exact products such as 10 * 1.1 from rounding up to 12.
    const double scaled = static_cast<double>(budget) * (1.0 + rate) - 1e-9;
    const auto wanted = static_cast<std::int64_t>(std::ceil(std::max(scaled, 0.0)));
    counts[group] = std::min(cap->second, std::max(wanted, budget));
  }
  return counts;
}

}  // namespace tokensieve
