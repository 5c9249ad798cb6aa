#include "tokensieve/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tokensieve {

std::string describe_distribution_problem(const ProbabilityDistribution& dist) {
  if (dist.probs.size() < 2) return "vocabulary size must be at least 2";
  double sum = 0.0;
  for (std::size_t j = 0; j < dist.probs.size(); ++j) {
    const double p = dist.probs[j];
    if (!std::isfinite(p)) return "non-finite probability at index " + std::to_string(j);
    if (p < 0.0) return "negative probability at index " + std::to_string(j);
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    std::ostringstream os;
    os.precision(9);
    os << "probabilities sum to " << sum << ", not 1";
    return os.str();
  }
  return {};
}

void require_valid(const ProbabilityDistribution& dist) {
  if (auto problem = describe_distribution_problem(dist); !problem.empty()) {
    throw std::invalid_argument("invalid probability distribution: " + problem);
  }
}

std::int64_t argmax_token(const ProbabilityDistribution& dist) {
  auto it = std::max_element(dist.probs.begin(), dist.probs.end());
  return static_cast<std::int64_t>(it - dist.probs.begin());
}

double normalized_frame_time(std::int64_t frame_index, std::int64_t total_frames) {
  if (total_frames <= 1) return 0.0;
  const double t = static_cast<double>(frame_index) / static_cast<double>(total_frames - 1);
  return std::clamp(t, 0.0, 1.0);
}

std::size_t attention_key_count(const AttentionSource& source) {
  if (const auto* tensor = std::get_if<AttentionTensor>(&source)) return tensor->keys;
  return std::get<QueryKeyEmbeddings>(source).keys.rows;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::all_groups_processed: return "all_groups_processed";
    case StopReason::early_stop: return "early_stop";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& text) {
  if (text == "all_groups_processed") return StopReason::all_groups_processed;
  if (text == "early_stop") return StopReason::early_stop;
  throw std::invalid_argument("unknown stop reason '" + text + "'");
}

namespace {

void check_response(const GeneratedResponse& response, const ValidationContext& context,
                    std::vector<Violation>& out) {
  if (response.empty()) {
    out.push_back({"response", "response has no generated steps"});
    return;
  }
  const std::size_t vocab = context.vocabulary_size.value_or(response.steps.front().distribution.size());
  for (std::size_t i = 0; i < response.steps.size(); ++i) {
    const auto& step = response.steps[i];
    const std::string field = "response.steps[" + std::to_string(i) + "]";
    if (auto problem = describe_distribution_problem(step.distribution); !problem.empty()) {
      out.push_back({field + ".distribution", "normalization violation: " + problem});
    }
    if (step.distribution.size() != vocab) {
      out.push_back({field + ".distribution",
                     "vocabulary size " + std::to_string(step.distribution.size()) +
                         " differs from " + std::to_string(vocab)});
    }
    if (step.chosen_token < 0 ||
        static_cast<std::size_t>(step.chosen_token) >= step.distribution.size()) {
      out.push_back({field + ".chosen_token",
                     "chosen token " + std::to_string(step.chosen_token) + " outside vocabulary"});
    }
  }
}

void check_tokens(const GroupTrace& trace, const ValidationContext& context,
                  std::vector<Violation>& out) {
  const std::set<std::int64_t> frames(trace.frame_indices.begin(), trace.frame_indices.end());
  std::optional<std::size_t> dim = context.feature_dim;
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    const auto& tok = trace.tokens[i];
    const std::string field = "tokens[" + std::to_string(i) + "]";
    if (!dim) dim = tok.feature.size();
    if (tok.feature.size() != *dim) {
      out.push_back({field + ".feature", "feature dimension " + std::to_string(tok.feature.size()) +
                                             " differs from " + std::to_string(*dim)});
    }
    if (std::any_of(tok.feature.begin(), tok.feature.end(),
                    [](double x) { return !std::isfinite(x); })) {
      out.push_back({field + ".feature", "non-finite feature value"});
    }
    if (!(tok.normalized_time >= 0.0 && tok.normalized_time <= 1.0)) {
      out.push_back({field + ".normalized_time", "normalized time outside [0, 1]"});
    } else if (context.total_frames) {
      const double expected = normalized_frame_time(tok.frame_index, *context.total_frames);
      if (std::abs(expected - tok.normalized_time) > 1e-6) {
        out.push_back({field + ".normalized_time",
                       "normalized time inconsistent with frame index " +
                           std::to_string(tok.frame_index)});
      }
    }
    if (!frames.contains(tok.frame_index)) {
      out.push_back({field + ".frame_index", "frame " + std::to_string(tok.frame_index) +
                                                 " is not one of the group's frames"});
    }
  }
}

void check_attention(const GroupTrace& trace, std::vector<Violation>& out) {
  const std::size_t token_count = trace.tokens.size();
  if (const auto* tensor = std::get_if<AttentionTensor>(&trace.attention)) {
    if (tensor->weights.size() != tensor->heads * tensor->queries * tensor->keys) {
      out.push_back({"attention", "attention tensor storage does not match H x T x V"});
      return;
    }
    if (tensor->keys != token_count) {
      out.push_back({"attention", "shape violation: attention has " + std::to_string(tensor->keys) +
                                      " keys but group has " + std::to_string(token_count) +
                                      " tokens"});
    }
    if (tensor->heads == 0 || tensor->queries == 0) {
      out.push_back({"attention", "attention tensor needs at least one head and one query"});
    }
    for (std::size_t h = 0; h < tensor->heads; ++h) {
      for (std::size_t t = 0; t < tensor->queries; ++t) {
        double sum = 0.0;
        bool bad = false;
        for (std::size_t v = 0; v < tensor->keys; ++v) {
          const double w = tensor->at(h, t, v);
          if (!std::isfinite(w) || w < 0.0) bad = true;
          sum += w;
        }
        if (bad || sum > 1.0 + kAttentionRowTolerance) {
          out.push_back({"attention", "attention row (head " + std::to_string(h) + ", query " +
                                          std::to_string(t) + ") is not a sub-normalized row"});
          return;
        }
      }
    }
    return;
  }
  const auto& qk = std::get<QueryKeyEmbeddings>(trace.attention);
  if (qk.keys.rows != token_count) {
    out.push_back({"attention.keys", "shape violation: " + std::to_string(qk.keys.rows) +
                                         " key rows but group has " + std::to_string(token_count) +
                                         " tokens"});
  }
  if (qk.queries.cols != qk.keys.cols) {
    out.push_back({"attention.queries", "query and key dimensions differ"});
  }
  if (qk.queries.rows == 0) out.push_back({"attention.queries", "no text queries"});
  if (qk.heads == 0 || qk.keys.cols < qk.heads || qk.keys.cols % qk.heads != 0) {
    out.push_back({"attention.heads", "feature dimension " + std::to_string(qk.keys.cols) +
                                          " is not divisible into " + std::to_string(qk.heads) +
                                          " heads"});
  }
  auto finite = [](const Matrix& m) {
    return std::all_of(m.data.begin(), m.data.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(qk.queries) || !finite(qk.keys)) {
    out.push_back({"attention", "non-finite query/key embedding"});
  }
}

}  // namespace

std::vector<Violation> validate_trace(const GroupTrace& trace, const ValidationContext& context) {
  std::vector<Violation> out;
  if (trace.group_id < 0) out.push_back({"group_id", "group id must be non-negative"});
  for (std::size_t i = 1; i < trace.frame_indices.size(); ++i) {
    if (trace.frame_indices[i] <= trace.frame_indices[i - 1]) {
      out.push_back({"frame_indices", "frame indices are not strictly increasing"});
      break;
    }
  }
  check_response(trace.response, context, out);
  check_tokens(trace, context, out);
  check_attention(trace, out);
  return out;
}

std::vector<Violation> validate_selection(const SelectionResult& result) {
  std::vector<Violation> out;
  std::set<std::pair<int, std::size_t>> seen;
  for (std::size_t i = 0; i < result.selected.size(); ++i) {
    const auto& s = result.selected[i];
    if (!seen.emplace(s.group_id, s.token_index).second) {
      out.push_back({"selected[" + std::to_string(i) + "]", "duplicate (group, token) pair"});
    }
    if (i > 0) {
      const auto& prev = result.selected[i - 1].token;
      if (std::pair(prev.frame_index, prev.spatial_slot) >
          std::pair(s.token.frame_index, s.token.spatial_slot)) {
        out.push_back({"selected[" + std::to_string(i) + "]", "not in temporal-spatial order"});
      }
    }
  }
  return out;
}

}  // namespace tokensieve
