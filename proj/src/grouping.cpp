#include "tokensieve/grouping.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tokensieve {

std::string to_string(GroupingStrategy strategy) {
  switch (strategy) {
    case GroupingStrategy::marginal: return "marginal";
    case GroupingStrategy::continuous: return "continuous";
    case GroupingStrategy::chunk: return "chunk";
  }
  return "unknown";
}

GroupingStrategy grouping_strategy_from_string(const std::string& text) {
  if (text == "marginal") return GroupingStrategy::marginal;
  if (text == "continuous") return GroupingStrategy::continuous;
  if (text == "chunk") return GroupingStrategy::chunk;
  throw std::invalid_argument("unknown grouping strategy '" + text +
                              "' (expected marginal, continuous or chunk)");
}

namespace {

void require_shape(std::int64_t n_frames, std::int64_t max_frames_per_group) {
  if (n_frames < 1) throw std::invalid_argument("frame count must be at least 1");
  if (max_frames_per_group < 1) throw std::invalid_argument("frames per group must be at least 1");
}

std::vector<int> sequential(std::size_t count) {
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::vector<std::vector<std::int64_t>> block_partition(std::int64_t n, std::int64_t k) {
  std::vector<std::vector<std::int64_t>> groups;
  for (std::int64_t start = 0; start < n; start += k) {
    auto& g = groups.emplace_back();
    for (std::int64_t f = start; f < std::min(n, start + k); ++f) g.push_back(f);
  }
  return groups;
}

}  // namespace

std::int64_t group_count_for(std::int64_t n_frames, std::int64_t max_frames_per_group) {
  require_shape(n_frames, max_frames_per_group);
  return (n_frames + max_frames_per_group - 1) / max_frames_per_group;
}

GroupingPlan split_marginal(std::int64_t n_frames, std::int64_t max_frames_per_group) {
  const std::int64_t g_count = group_count_for(n_frames, max_frames_per_group);
  GroupingPlan plan;
  plan.strategy = GroupingStrategy::marginal;
  plan.groups.resize(static_cast<std::size_t>(g_count));
  for (std::int64_t g = 0; g < g_count; ++g) {
    for (std::int64_t f = g; f < n_frames; f += g_count) {
      plan.groups[static_cast<std::size_t>(g)].push_back(f);
    }
  }
  plan.traversal = max_margin_order(g_count);
  return plan;
}

GroupingPlan split_continuous(std::int64_t n_frames, std::int64_t max_frames_per_group) {
  require_shape(n_frames, max_frames_per_group);
  GroupingPlan plan;
  plan.strategy = GroupingStrategy::continuous;
  plan.groups = block_partition(n_frames, max_frames_per_group);
  plan.traversal = sequential(plan.groups.size());
  return plan;
}

GroupingPlan split_chunk(std::int64_t n_frames, std::int64_t max_frames_per_group) {
  GroupingPlan plan = split_continuous(n_frames, max_frames_per_group);
  plan.strategy = GroupingStrategy::chunk;
  return plan;
}

GroupingPlan make_plan(GroupingStrategy strategy, std::int64_t n_frames,
                       std::int64_t max_frames_per_group) {
  switch (strategy) {
    case GroupingStrategy::marginal: return split_marginal(n_frames, max_frames_per_group);
    case GroupingStrategy::continuous: return split_continuous(n_frames, max_frames_per_group);
    case GroupingStrategy::chunk: return split_chunk(n_frames, max_frames_per_group);
  }
  throw std::invalid_argument("unknown grouping strategy");
}

namespace {

// vdc(n) = reversed_bits(n) / 2^bits, returned as (numerator, bits).
std::pair<std::uint64_t, int> vdc_fraction(std::uint64_t n) {
  const int bits = std::bit_width(n);
  std::uint64_t reversed = 0;
  for (int i = 0; i < bits; ++i) {
    reversed = (reversed << 1) | ((n >> i) & 1U);
  }
  return {reversed, bits};
}

}  // namespace

double van_der_corput(std::uint64_t n) {
  const auto [num, bits] = vdc_fraction(n);
  return std::ldexp(static_cast<double>(num), -bits);
}

std::vector<int> max_margin_order(std::int64_t group_count) {
  if (group_count < 1) throw std::invalid_argument("group count must be at least 1");
  if (group_count > (std::int64_t{1} << 30)) throw std::invalid_argument("group count too large");
  const auto g = static_cast<std::uint64_t>(group_count);
  std::vector<bool> seen(g, false);
  std::vector<int> order;
  order.reserve(g);
  for (std::uint64_t n = 0; order.size() < g; ++n) {
    const auto [num, bits] = vdc_fraction(n);
    const std::uint64_t id = (num * g) >> bits;
    if (!seen[id]) {
      seen[id] = true;
      order.push_back(static_cast<int>(id));
    }
  }
  return order;
}

}  // namespace tokensieve
