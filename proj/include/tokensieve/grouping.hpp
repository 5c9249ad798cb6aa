#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tokensieve {

enum class GroupingStrategy { marginal, continuous, chunk };

std::string to_string(GroupingStrategy strategy);
GroupingStrategy grouping_strategy_from_string(const std::string& text);

inline constexpr std::int64_t kDefaultMaxFramesPerGroup = 64;

struct GroupingConfig {
  GroupingStrategy strategy = GroupingStrategy::marginal;
  std::int64_t max_frames_per_group = kDefaultMaxFramesPerGroup;
};

/// How N frames are split into groups, and the order groups are visited.
struct GroupingPlan {
  GroupingStrategy strategy = GroupingStrategy::marginal;
  std::vector<std::vector<std::int64_t>> groups;
  std::vector<int> traversal;

  std::size_t group_count() const { return groups.size(); }
  bool operator==(const GroupingPlan&) const = default;
};

/// ceil(n_frames / max_frames_per_group).
std::int64_t group_count_for(std::int64_t n_frames, std::int64_t max_frames_per_group);

/// Strided groups: group g holds frames g, g+G, g+2G, ... Visited in
/// max-margin order.
GroupingPlan split_marginal(std::int64_t n_frames, std::int64_t max_frames_per_group);

/// Consecutive blocks of K frames, visited sequentially.
GroupingPlan split_continuous(std::int64_t n_frames, std::int64_t max_frames_per_group);

/// Same block partition as split_continuous; downstream, each chunk is
/// reduced locally instead of through the global redundancy pool.
GroupingPlan split_chunk(std::int64_t n_frames, std::int64_t max_frames_per_group);

GroupingPlan make_plan(GroupingStrategy strategy, std::int64_t n_frames,
                       std::int64_t max_frames_per_group);

/// Base-2 van der Corput value of n, as the exact fraction numerator / 2^bits.
double van_der_corput(std::uint64_t n);

/// Group visiting order that keeps every prefix spread across [0, G):
/// the distinct values of floor(vdc(n) * G) for n = 0, 1, 2, ...
std::vector<int> max_margin_order(std::int64_t group_count);

}  // namespace tokensieve
