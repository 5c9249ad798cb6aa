#pragma once

// Location-aware redundancy removal. Pairwise similarity is the sum of a
// feature term and a temporal term:
//   S_f(i, j) = cos(x_i, x_j)
//   S_d(i, j) = exp(-(d_i - d_j)^2 / sigma)
//   S = S_f + S_d
// and tokens are dropped greedily from the most similar remaining pair.

#include <cstddef>
#include <span>
#include <vector>

#include "tokensieve/core.hpp"

namespace tokensieve {

inline constexpr double kDefaultTemporalSigma = 0.3;

struct RedundancyConfig {
  double sigma = kDefaultTemporalSigma;
  bool enabled = true;
};

/// Symmetric M x M similarity with its two components kept for diagnostics.
struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> combined;
  std::vector<double> feature;
  std::vector<double> temporal;

  double at(std::size_t i, std::size_t j) const { return combined[i * size + j]; }
  double feature_at(std::size_t i, std::size_t j) const { return feature[i * size + j]; }
  double temporal_at(std::size_t i, std::size_t j) const { return temporal[i * size + j]; }
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

double temporal_similarity(double time_a, double time_b, double sigma);

/// Throws std::invalid_argument on zero-norm features, mismatched feature
/// dimensions, an empty token list or a non-positive sigma.
SimilarityMatrix build_similarity(std::span<const TokenRecord> tokens, double sigma);

/// Greedily discards tokens until `target` remain. Each step takes the
/// off-diagonal pair with the largest similarity (ties: smallest (i, j)) and
/// drops the member with lower relevance, then the later normalized time,
/// then the larger index. Returns surviving indices in ascending order.
std::vector<std::size_t> remove_redundant(std::span<const TokenRecord> tokens,
                                          const SimilarityMatrix& similarity, std::size_t target,
                                          std::span<const double> relevances);

}  // namespace tokensieve
