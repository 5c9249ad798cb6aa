#pragma once

// Response certainty from next-token distributions.
//
// Per-token certainty c_i is one of
//   entropy     c_i = -H(P_i)            (natural log)
//   confidence  c_i = max_j P_i(j)
//   kl_uniform  c_i = KL(P_i || U_D) = ln D - H(P_i)
// and a response is scored by the mean of its lowest-certainty steps.

#include <optional>
#include <string>

#include "tokensieve/core.hpp"

namespace tokensieve {

enum class CertaintyMeasure { entropy, confidence, kl_uniform };

std::string to_string(CertaintyMeasure measure);
CertaintyMeasure certainty_measure_from_string(const std::string& text);

/// Probabilities below this contribute nothing to the entropy sum.
inline constexpr double kEntropyProbabilityFloor = 1e-12;

/// Default share of lowest-certainty steps averaged into a response score.
inline constexpr double kDefaultBottomFraction = 0.10;

struct CertaintyScore {
  double value = 0.0;  // higher = more certain
  CertaintyMeasure measure = CertaintyMeasure::entropy;
  /// Mean entropy of the bottom set; present only for the entropy measure.
  std::optional<double> mean_bottom_entropy;
};

struct CertaintyConfig {
  CertaintyMeasure measure = CertaintyMeasure::entropy;
  double bottom_fraction = kDefaultBottomFraction;
};

double token_entropy(const ProbabilityDistribution& dist);
double token_kl_uniform(const ProbabilityDistribution& dist);
double token_confidence(const ProbabilityDistribution& dist);

/// Per-step certainty under `measure` (sign: higher = more certain).
double token_certainty(const ProbabilityDistribution& dist, CertaintyMeasure measure);

/// Size of the bottom set for a response of `steps` tokens:
/// max(1, ceil(steps * fraction)).
std::size_t bottom_set_size(std::size_t steps, double fraction);

/// Mean certainty over the lowest-certainty steps. Ties at the cut are
/// resolved in favour of the earlier step.
CertaintyScore response_certainty(const GeneratedResponse& response, CertaintyMeasure measure,
                                  double bottom_fraction = kDefaultBottomFraction);

inline CertaintyScore response_certainty(const GeneratedResponse& response,
                                         const CertaintyConfig& config) {
  return response_certainty(response, config.measure, config.bottom_fraction);
}

}  // namespace tokensieve
