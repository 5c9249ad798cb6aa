#pragma once

// Shared domain types for the token selection engine. These are plain value
// objects; algorithms live in their own headers.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tokensieve {

/// Absolute tolerance on the sum of a probability vector.
inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Slack allowed on attention rows that are meant to sum to at most one.
inline constexpr double kAttentionRowTolerance = 1e-4;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// Normalized next-token distribution over a vocabulary of size D.
struct ProbabilityDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  bool operator==(const ProbabilityDistribution&) const = default;
};

/// Returns an empty string when `dist` is a valid distribution, otherwise a
/// short description of the first violated invariant.
std::string describe_distribution_problem(const ProbabilityDistribution& dist);

/// Throws std::invalid_argument if `dist` is not a valid distribution.
void require_valid(const ProbabilityDistribution& dist);

struct ResponseStep {
  ProbabilityDistribution distribution;
  std::int64_t chosen_token = 0;

  bool operator==(const ResponseStep&) const = default;
};

struct GeneratedResponse {
  std::vector<ResponseStep> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
  bool operator==(const GeneratedResponse&) const = default;
};

/// Greedy decoding rule: index of the largest probability, lowest index on ties.
std::int64_t argmax_token(const ProbabilityDistribution& dist);

/// One visual token.
struct TokenRecord {
  std::vector<double> feature;
  std::int64_t frame_index = 0;
  double normalized_time = 0.0;
  std::int32_t spatial_slot = 0;
  double relevance = 0.0;

  bool operator==(const TokenRecord&) const = default;
};

/// frame_index / (total_frames - 1) clamped to [0, 1]; 0 for single-frame videos.
double normalized_frame_time(std::int64_t frame_index, std::int64_t total_frames);

/// Per-head cross-modal attention weights, laid out [head][query][key].
struct AttentionTensor {
  std::size_t heads = 0;
  std::size_t queries = 0;
  std::size_t keys = 0;
  std::vector<double> weights;

  AttentionTensor() = default;
  AttentionTensor(std::size_t h, std::size_t t, std::size_t v)
      : heads(h), queries(t), keys(v), weights(h * t * v, 0.0) {}

  double& at(std::size_t h, std::size_t t, std::size_t v) {
    return weights[(h * queries + t) * keys + v];
  }
  double at(std::size_t h, std::size_t t, std::size_t v) const {
    return weights[(h * queries + t) * keys + v];
  }

  bool operator==(const AttentionTensor&) const = default;
};

/// Raw text-query and visual-key embeddings from the reference layer. The
/// feature dimension is split into `heads` contiguous slices.
struct QueryKeyEmbeddings {
  Matrix queries;  // T x d
  Matrix keys;     // V x d
  std::size_t heads = 1;

  bool operator==(const QueryKeyEmbeddings&) const = default;
};

using AttentionSource = std::variant<AttentionTensor, QueryKeyEmbeddings>;

/// Number of visual keys described by an attention source.
std::size_t attention_key_count(const AttentionSource& source);

/// Everything recorded for one frame group's forward pass.
struct GroupTrace {
  int group_id = 0;
  std::vector<std::int64_t> frame_indices;
  std::vector<TokenRecord> tokens;
  GeneratedResponse response;
  AttentionSource attention;
  std::optional<std::string> answer_label;

  bool operator==(const GroupTrace&) const = default;
};

struct BudgetAllocation {
  std::map<int, std::int64_t> per_group;
  std::int64_t total = 0;

  std::int64_t budget_of(int group_id) const {
    auto it = per_group.find(group_id);
    return it == per_group.end() ? 0 : it->second;
  }
  bool operator==(const BudgetAllocation&) const = default;
};

enum class StopReason { all_groups_processed, early_stop };

std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& text);

struct SelectedToken {
  int group_id = 0;
  std::size_t token_index = 0;
  TokenRecord token;

  bool operator==(const SelectedToken&) const = default;
};

struct SelectionMetadata {
  std::int64_t budget_requested = 0;
  std::int64_t budget_used = 0;
  std::map<int, std::int64_t> budgets;
  std::map<int, std::int64_t> overselected;
  std::vector<int> groups_processed;  // ascending group id
  std::size_t groups_total = 0;
  std::size_t pool_size = 0;
  StopReason stop_reason = StopReason::all_groups_processed;

  bool operator==(const SelectionMetadata&) const = default;
};

/// Final token set, ordered by (frame_index, spatial_slot).
struct SelectionResult {
  std::vector<SelectedToken> selected;
  SelectionMetadata metadata;

  bool operator==(const SelectionResult&) const = default;
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationContext {
  /// Total frame count of the video; enables the normalized-time check.
  std::optional<std::int64_t> total_frames;
  /// Expected vocabulary size; enables the cross-trace vocabulary check.
  std::optional<std::size_t> vocabulary_size;
  /// Expected feature dimension; enables the cross-trace dimension check.
  std::optional<std::size_t> feature_dim;
};

/// Checks every structural invariant of a trace. Violations are returned as
/// data; an empty vector means the trace is well formed.
std::vector<Violation> validate_trace(const GroupTrace& trace,
                                      const ValidationContext& context = {});

/// Checks the invariants of a SelectionResult (no duplicates, temporal order).
std::vector<Violation> validate_selection(const SelectionResult& result);

}  // namespace tokensieve
