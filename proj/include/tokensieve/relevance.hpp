#pragma once

// Prompt relevance of visual tokens from cross-modal attention:
//   r_v = max_t sum_h Attn_h(q_t, k_v)

#include <optional>
#include <string>
#include <vector>

#include "tokensieve/core.hpp"

namespace tokensieve {

using RelevanceScores = std::vector<double>;

/// Span of keys the attention softmax was normalized over.
enum class AttentionNormalization { visual_only, full_context };

std::string to_string(AttentionNormalization normalization);
AttentionNormalization attention_normalization_from_string(const std::string& text);

/// Head-summed, query-maximized relevance. When `expected_tokens` is given,
/// a key-count mismatch throws std::invalid_argument.
RelevanceScores relevance_from_attention(const AttentionTensor& attention,
                                         std::optional<std::size_t> expected_tokens = {});

/// Softmax attention over the visual keys, one head per contiguous slice of
/// the feature dimension, scaled by 1/sqrt(d/H).
AttentionTensor materialize_attention(const Matrix& queries, const Matrix& keys,
                                      std::size_t heads);

RelevanceScores relevance_from_qk(const Matrix& queries, const Matrix& keys, std::size_t heads);

/// Relevance for a whole trace, whichever attention source it carries.
RelevanceScores relevance_for(const GroupTrace& trace);

}  // namespace tokensieve
