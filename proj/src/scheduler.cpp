#include "tokensieve/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "tokensieve/relevance.hpp"

namespace tokensieve {

void PipelineConfig::validate() const {
  if (!(entropy_threshold > 0.0)) throw std::invalid_argument("entropy threshold must be positive");
  if (group_threshold < 1) throw std::invalid_argument("group threshold must be at least 1");
  if (!(certainty.bottom_fraction > 0.0 && certainty.bottom_fraction <= 1.0)) {
    throw std::invalid_argument("certainty.bottom_fraction must lie in (0, 1]");
  }
  if (grouping.max_frames_per_group < 1) {
    throw std::invalid_argument("grouping.max_frames_per_group must be at least 1");
  }
  if (!(allocation.tau > 0.0)) throw std::invalid_argument("allocation.tau must be positive");
  if (!(allocation.overselect_rate >= 0.0 && allocation.overselect_rate <= 1.0)) {
    throw std::invalid_argument("allocation.overselect_rate must lie in [0, 1]");
  }
  if (!(redundancy.sigma > 0.0)) throw std::invalid_argument("redundancy.sigma must be positive");
}

EarlyStopController::EarlyStopController(std::vector<int> traversal, double entropy_threshold,
                                         int group_threshold, bool enabled)
    : traversal_(std::move(traversal)),
      entropy_threshold_(entropy_threshold),
      group_threshold_(group_threshold),
      enabled_(enabled) {
  if (group_threshold_ < 1) throw std::invalid_argument("group threshold must be at least 1");
  stopped_ = traversal_.empty();
}

std::optional<int> EarlyStopController::next_group() const {
  if (stopped_) return std::nullopt;
  return traversal_[processed_.size()];
}

void EarlyStopController::commit(int group_id, const CertaintyScore& certainty,
                                 double mean_bottom_entropy) {
  if (stopped_) throw std::logic_error("traversal already stopped");
  if (group_id != traversal_[processed_.size()]) {
    throw std::logic_error("group " + std::to_string(group_id) + " committed out of traversal order");
  }
  processed_.push_back({group_id, certainty, mean_bottom_entropy});
  if (mean_bottom_entropy < entropy_threshold_) ++count_;
  if (enabled_ && count_ >= group_threshold_) {
    stopped_ = true;
    stop_reason_ = StopReason::early_stop;
  } else if (processed_.size() == traversal_.size()) {
    stopped_ = true;
    stop_reason_ = StopReason::all_groups_processed;
  }
}

namespace {

struct PoolEntry {
  int group_id;
  std::size_t token_index;
  const TokenRecord* token;
  double relevance;
};

std::vector<std::size_t> reduce(std::span<const PoolEntry> pool, std::size_t target, double sigma) {
  if (pool.size() <= target) {
    std::vector<std::size_t> all(pool.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<TokenRecord> tokens;
  std::vector<double> relevances;
  tokens.reserve(pool.size());
  for (const auto& e : pool) {
    tokens.push_back(*e.token);
    relevances.push_back(e.relevance);
  }
  const auto sim = build_similarity(tokens, sigma);
  return remove_redundant(tokens, sim, target, relevances);
}

}  // namespace

SelectionResult run_pipeline(std::span<const GroupTrace> traces, std::span<const int> traversal,
                             GroupingStrategy strategy, std::int64_t budget,
                             const PipelineConfig& config) {
  config.validate();
  if (budget < 0) throw std::invalid_argument("budget must be non-negative");

  std::map<int, const GroupTrace*> by_id;
  for (const auto& t : traces) {
    if (!by_id.emplace(t.group_id, &t).second) {
      throw std::invalid_argument("duplicate trace for group " + std::to_string(t.group_id));
    }
  }
  std::set<int> scheduled;
  for (int g : traversal) {
    if (!by_id.contains(g)) throw std::invalid_argument("missing trace for group " + std::to_string(g));
    if (!scheduled.insert(g).second) {
      throw std::invalid_argument("group " + std::to_string(g) + " appears twice in the traversal");
    }
  }

  EarlyStopController controller({traversal.begin(), traversal.end()}, config.entropy_threshold,
                                 config.group_threshold, config.early_stopping);
  std::map<int, RelevanceScores> relevance;
  while (auto next = controller.next_group()) {
    const GroupTrace& trace = *by_id.at(*next);
    if (trace.response.empty()) {
      throw std::invalid_argument("group " + std::to_string(*next) + " has an empty response");
    }
    const CertaintyScore score = response_certainty(trace.response, config.certainty);
    const double entropy = score.mean_bottom_entropy
                               ? *score.mean_bottom_entropy
                               : *response_certainty(trace.response, CertaintyMeasure::entropy,
                                                     config.certainty.bottom_fraction)
                                      .mean_bottom_entropy;
    relevance.emplace(*next, relevance_for(trace));
    controller.commit(*next, score, entropy);
  }

  // Allocation runs over processed groups in id order so the result does
  // not depend on the traversal permutation.
  std::vector<const ProcessedGroup*> processed;
  for (const auto& p : controller.processed()) processed.push_back(&p);
  std::sort(processed.begin(), processed.end(),
            [](const ProcessedGroup* a, const ProcessedGroup* b) { return a->group_id < b->group_id; });

  std::vector<double> certainties;
  std::vector<std::int64_t> capacities;
  std::map<int, std::int64_t> capacity_by_id;
  for (const auto* p : processed) {
    certainties.push_back(p->certainty.value);
    const auto cap = static_cast<std::int64_t>(by_id.at(p->group_id)->tokens.size());
    capacities.push_back(cap);
    capacity_by_id[p->group_id] = cap;
  }
  const std::int64_t available = std::accumulate(capacities.begin(), capacities.end(), std::int64_t{0});
  const std::int64_t effective = std::min(budget, available);

  BudgetAllocation allocation;
  allocation.total = effective;
  if (!processed.empty()) {
    const auto positional = allocate_budgets(certainties, effective, config.allocation.tau, capacities);
    for (std::size_t i = 0; i < processed.size(); ++i) {
      allocation.per_group[processed[i]->group_id] = positional.per_group.at(static_cast<int>(i));
    }
  }
  const auto counts = config.redundancy.enabled
                          ? overselect_counts(allocation, config.allocation.overselect_rate, capacity_by_id)
                          : allocation.per_group;

  std::vector<PoolEntry> pool;
  std::vector<PoolEntry> kept;
  for (const auto& [group, count] : counts) {
    const GroupTrace& trace = *by_id.at(group);
    const auto& scores = relevance.at(group);
    const auto top = select_top_tokens(trace, scores, static_cast<std::size_t>(count));
    const std::size_t group_start = pool.size();
    for (std::size_t idx : top) pool.push_back({group, idx, &trace.tokens[idx], scores[idx]});
    if (config.redundancy.enabled && strategy == GroupingStrategy::chunk) {
      std::span<const PoolEntry> local(pool.data() + group_start, pool.size() - group_start);
      for (std::size_t i : reduce(local, static_cast<std::size_t>(allocation.per_group.at(group)),
                                  config.redundancy.sigma)) {
        kept.push_back(local[i]);
      }
    }
  }
  if (strategy != GroupingStrategy::chunk || !config.redundancy.enabled) {
    if (config.redundancy.enabled) {
      for (std::size_t i : reduce(pool, static_cast<std::size_t>(effective), config.redundancy.sigma)) {
        kept.push_back(pool[i]);
      }
    } else {
      kept = pool;
    }
  }

  SelectionResult result;
  result.selected.reserve(kept.size());
  for (const auto& e : kept) {
    SelectedToken s{e.group_id, e.token_index, *e.token};
    s.token.relevance = e.relevance;
    result.selected.push_back(std::move(s));
  }
  std::sort(result.selected.begin(), result.selected.end(),
            [](const SelectedToken& a, const SelectedToken& b) {
              return std::tie(a.token.frame_index, a.token.spatial_slot, a.group_id, a.token_index) <
                     std::tie(b.token.frame_index, b.token.spatial_slot, b.group_id, b.token_index);
            });

  auto& meta = result.metadata;
  meta.budget_requested = budget;
  meta.budget_used = effective;
  meta.budgets = allocation.per_group;
  meta.overselected = counts;
  for (const auto* p : processed) meta.groups_processed.push_back(p->group_id);
  meta.groups_total = traversal.size();
  meta.pool_size = pool.size();
  meta.stop_reason = controller.stop_reason();
  return result;
}

std::string to_string(VoteMethod method) {
  switch (method) {
    case VoteMethod::majority: return "majority";
    case VoteMethod::weighted: return "weighted";
    case VoteMethod::borda: return "borda";
  }
  return "unknown";
}

VoteMethod vote_method_from_string(const std::string& text) {
  if (text == "majority") return VoteMethod::majority;
  if (text == "weighted") return VoteMethod::weighted;
  if (text == "borda") return VoteMethod::borda;
  throw std::invalid_argument("unknown voting method '" + text + "'");
}

std::string vote(std::span<const VoteEntry> entries, VoteMethod method, double borda_exponent) {
  if (entries.empty()) throw std::invalid_argument("cannot vote over zero responses");

  std::vector<double> contribution(entries.size(), 0.0);
  switch (method) {
    case VoteMethod::majority:
      std::fill(contribution.begin(), contribution.end(), 1.0);
      break;
    case VoteMethod::weighted: {
      std::vector<double> c;
      for (const auto& e : entries) c.push_back(e.certainty);
      contribution = softmax_weights(c, 1.0);
      break;
    }
    case VoteMethod::borda: {
      std::vector<std::size_t> rank_order(entries.size());
      std::iota(rank_order.begin(), rank_order.end(), 0);
      std::stable_sort(rank_order.begin(), rank_order.end(), [&](std::size_t a, std::size_t b) {
        return entries[a].certainty > entries[b].certainty;
      });
      const auto n = static_cast<double>(entries.size());
      for (std::size_t r = 0; r < rank_order.size(); ++r) {
        // rank r + 1 scores (N - (r + 1) + 1)^p
        contribution[rank_order[r]] = std::pow(n - static_cast<double>(r), borda_exponent);
      }
      break;
    }
  }

  struct Tally {
    double score = 0.0;
    double best_certainty = 0.0;
    std::size_t first_entry = 0;
  };
  std::map<std::string, Tally> tally;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto [it, fresh] = tally.try_emplace(entries[i].label);
    auto& t = it->second;
    if (fresh) {
      t.best_certainty = entries[i].certainty;
      t.first_entry = i;
    } else {
      t.best_certainty = std::max(t.best_certainty, entries[i].certainty);
    }
    t.score += contribution[i];
  }
  const auto winner = std::max_element(tally.begin(), tally.end(), [](const auto& a, const auto& b) {
    if (a.second.score != b.second.score) return a.second.score < b.second.score;
    if (a.second.best_certainty != b.second.best_certainty) {
      return a.second.best_certainty < b.second.best_certainty;
    }
    return a.second.first_entry > b.second.first_entry;
  });
  return winner->first;
}

}  // namespace tokensieve

namespace tokensieve {

std::int64_t tokens_per_frame_of(const TraceBundle& bundle) {
  if (bundle.manifest.tokens_per_frame > 0) return bundle.manifest.tokens_per_frame;
  for (const auto& g : bundle.groups) {
    if (!g.frame_indices.empty()) {
      return static_cast<std::int64_t>(g.tokens.size() / g.frame_indices.size());
    }
  }
  return 0;
}

SelectionResult run_pipeline(const TraceBundle& bundle, const PipelineConfig& config,
                             std::optional<std::vector<int>> traversal) {
  const auto& m = bundle.manifest;
  std::vector<int> order = traversal ? std::move(*traversal)
                                     : make_plan(m.strategy, m.n_frames, m.max_frames_per_group).traversal;
  const std::int64_t budget = resolve_budget(config.allocation, tokens_per_frame_of(bundle));
  return run_pipeline(bundle.groups, order, m.strategy, budget, config);
}

}  // namespace tokensieve
