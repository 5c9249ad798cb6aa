#include "tokensieve/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tokensieve {

std::string to_string(AttentionNormalization normalization) {
  switch (normalization) {
    case AttentionNormalization::visual_only: return "visual_only";
    case AttentionNormalization::full_context: return "full_context";
  }
  return "unknown";
}

AttentionNormalization attention_normalization_from_string(const std::string& text) {
  if (text == "visual_only") return AttentionNormalization::visual_only;
  if (text == "full_context") return AttentionNormalization::full_context;
  throw std::invalid_argument("unknown attention normalization '" + text + "'");
}

RelevanceScores relevance_from_attention(const AttentionTensor& attention,
                                         std::optional<std::size_t> expected_tokens) {
  const std::size_t heads = attention.heads;
  const std::size_t queries = attention.queries;
  const std::size_t keys = attention.keys;
  if (attention.weights.size() != heads * queries * keys) {
    throw std::invalid_argument("attention tensor storage does not match its H x T x V shape");
  }
  if (expected_tokens && *expected_tokens != keys) {
    throw std::invalid_argument("attention has " + std::to_string(keys) + " keys but the group has " +
                                std::to_string(*expected_tokens) + " tokens");
  }
  if (heads == 0 || queries == 0) {
    throw std::invalid_argument("attention tensor needs at least one head and one query");
  }

  RelevanceScores scores(keys, 0.0);
  std::vector<double> summed(keys);
  for (std::size_t t = 0; t < queries; ++t) {
    std::fill(summed.begin(), summed.end(), 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      double row_sum = 0.0;
      for (std::size_t v = 0; v < keys; ++v) {
        const double w = attention.at(h, t, v);
        if (!(w >= 0.0)) throw std::invalid_argument("attention weights must be non-negative");
        row_sum += w;
        summed[v] += w;
      }
      if (row_sum > 1.0 + kAttentionRowTolerance) {
        throw std::invalid_argument("attention row (head " + std::to_string(h) + ", query " +
                                    std::to_string(t) + ") sums to more than one");
      }
    }
    if (t == 0) {
      scores = summed;
    } else {
      for (std::size_t v = 0; v < keys; ++v) scores[v] = std::max(scores[v], summed[v]);
    }
  }
  return scores;
}

AttentionTensor materialize_attention(const Matrix& queries, const Matrix& keys,
                                      std::size_t heads) {
  const std::size_t dim = keys.cols;
  if (queries.cols != dim) throw std::invalid_argument("query and key dimensions differ");
  if (heads == 0 || dim < heads || dim % heads != 0) {
    throw std::invalid_argument("feature dimension " + std::to_string(dim) +
                                " is not divisible into " + std::to_string(heads) + " heads");
  }
  const std::size_t head_dim = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  AttentionTensor attn(heads, queries.rows, keys.rows);
  std::vector<double> logits(keys.rows);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * head_dim;
    for (std::size_t t = 0; t < queries.rows; ++t) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < keys.rows; ++v) {
        double dot = 0.0;
        for (std::size_t c = lo; c < lo + head_dim; ++c) dot += queries(t, c) * keys(v, c);
        logits[v] = dot * scale;
        peak = std::max(peak, logits[v]);
      }
      double norm = 0.0;
      for (std::size_t v = 0; v < keys.rows; ++v) {
        logits[v] = std::exp(logits[v] - peak);
        norm += logits[v];
      }
      for (std::size_t v = 0; v < keys.rows; ++v) attn.at(h, t, v) = logits[v] / norm;
    }
  }
  return attn;
}

RelevanceScores relevance_from_qk(const Matrix& queries, const Matrix& keys, std::size_t heads) {
  return relevance_from_attention(materialize_attention(queries, keys, heads));
}

RelevanceScores relevance_for(const GroupTrace& trace) {
  if (const auto* tensor = std::get_if<AttentionTensor>(&trace.attention)) {
    return relevance_from_attention(*tensor, trace.tokens.size());
  }
  const auto& qk = std::get<QueryKeyEmbeddings>(trace.attention);
  if (qk.keys.rows != trace.tokens.size()) {
    throw std::invalid_argument("group " + std::to_string(trace.group_id) + " has " +
                                std::to_string(qk.keys.rows) + " key rows but " +
                                std::to_string(trace.tokens.size()) + " tokens");
  }
  return relevance_from_qk(qk.queries, qk.keys, qk.heads);
}

}  // namespace tokensieve
