#include "tokensieve/certainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tokensieve {

std::string to_string(CertaintyMeasure measure) {
  switch (measure) {
    case CertaintyMeasure::entropy: return "entropy";
    case CertaintyMeasure::confidence: return "confidence";
    case CertaintyMeasure::kl_uniform: return "kl_uniform";
  }
  return "unknown";
}

CertaintyMeasure certainty_measure_from_string(const std::string& text) {
  if (text == "entropy") return CertaintyMeasure::entropy;
  if (text == "confidence") return CertaintyMeasure::confidence;
  if (text == "kl_uniform") return CertaintyMeasure::kl_uniform;
  throw std::invalid_argument("unknown certainty measure '" + text +
                              "' (expected entropy, confidence or kl_uniform)");
}

namespace {

double entropy_unchecked(const ProbabilityDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p >= kEntropyProbabilityFloor) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

}  // namespace

double token_entropy(const ProbabilityDistribution& dist) {
  require_valid(dist);
  return entropy_unchecked(dist);
}

double token_kl_uniform(const ProbabilityDistribution& dist) {
  require_valid(dist);
  const double kl = std::log(static_cast<double>(dist.size())) - entropy_unchecked(dist);
  return std::max(kl, 0.0);
}

double token_confidence(const ProbabilityDistribution& dist) {
  require_valid(dist);
  return *std::max_element(dist.probs.begin(), dist.probs.end());
}

double token_certainty(const ProbabilityDistribution& dist, CertaintyMeasure measure) {
  switch (measure) {
    case CertaintyMeasure::entropy: return -token_entropy(dist);
    case CertaintyMeasure::confidence: return token_confidence(dist);
    case CertaintyMeasure::kl_uniform: return token_kl_uniform(dist);
  }
  throw std::invalid_argument("unknown certainty measure");
}

std::size_t bottom_set_size(std::size_t steps, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("bottom fraction must lie in (0, 1]");
  }
  // The slack absorbs products like 30 * 0.1 = 3.0000000000000004.
  const double raw = static_cast<double>(steps) * fraction - 1e-9;
  const auto count = static_cast<std::size_t>(std::max(0.0, std::ceil(raw)));
  return std::clamp<std::size_t>(count, 1, std::max<std::size_t>(steps, 1));
}

CertaintyScore response_certainty(const GeneratedResponse& response, CertaintyMeasure measure,
                                  double bottom_fraction) {
  const std::size_t k = bottom_set_size(response.size(), bottom_fraction);
  if (response.empty()) throw std::invalid_argument("response has no generated steps");

  std::vector<double> certainty(response.size());
  for (std::size_t i = 0; i < response.size(); ++i) {
    certainty[i] = token_certainty(response.steps[i].distribution, measure);
  }
  std::vector<std::size_t> order(response.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return certainty[a] < certainty[b]; });

  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += certainty[order[i]];

  CertaintyScore score;
  score.measure = measure;
  score.value = sum / static_cast<double>(k);
  if (measure == CertaintyMeasure::entropy) score.mean_bottom_entropy = -score.value;
  return score;
}

}  // namespace tokensieve
