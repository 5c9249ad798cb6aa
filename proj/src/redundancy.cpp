#include "tokensieve/redundancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tokensieve {

namespace {

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("feature dimensions differ");
  const double na = norm_of(a);
  const double nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("zero-norm feature vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double temporal_similarity(double time_a, double time_b, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("temporal sigma must be positive");
  const double gap = time_a - time_b;
  return std::exp(-(gap * gap) / sigma);
}

SimilarityMatrix build_similarity(std::span<const TokenRecord> tokens, double sigma) {
  if (tokens.empty()) throw std::invalid_argument("similarity needs at least one token");
  if (!(sigma > 0.0)) throw std::invalid_argument("temporal sigma must be positive");
  const std::size_t m = tokens.size();
  const std::size_t dim = tokens.front().feature.size();

  std::vector<double> inv_norm(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (tokens[i].feature.size() != dim) {
      throw std::invalid_argument("token " + std::to_string(i) + " has feature dimension " +
                                  std::to_string(tokens[i].feature.size()) + ", expected " +
                                  std::to_string(dim));
    }
    const double n = norm_of(tokens[i].feature);
    if (n == 0.0) throw std::invalid_argument("token " + std::to_string(i) + " has a zero-norm feature");
    inv_norm[i] = 1.0 / n;
  }

  SimilarityMatrix s;
  s.size = m;
  s.combined.assign(m * m, 0.0);
  s.feature.assign(m * m, 0.0);
  s.temporal.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double dot = 0.0;
      const auto& a = tokens[i].feature;
      const auto& b = tokens[j].feature;
      for (std::size_t c = 0; c < dim; ++c) dot += a[c] * b[c];
      const double f = std::clamp(dot * inv_norm[i] * inv_norm[j], -1.0, 1.0);
      const double d = temporal_similarity(tokens[i].normalized_time, tokens[j].normalized_time, sigma);
      for (auto [r, c] : {std::pair{i, j}, std::pair{j, i}}) {
        s.feature[r * m + c] = f;
        s.temporal[r * m + c] = d;
        s.combined[r * m + c] = f + d;
      }
    }
  }
  return s;
}

std::vector<std::size_t> remove_redundant(std::span<const TokenRecord> tokens,
                                          const SimilarityMatrix& similarity, std::size_t target,
                                          std::span<const double> relevances) {
  const std::size_t m = tokens.size();
  if (similarity.size != m) throw std::invalid_argument("similarity matrix does not match token count");
  if (relevances.size() != m) throw std::invalid_argument("one relevance per token is required");

  std::vector<std::size_t> kept;
  if (target >= m) {
    kept.resize(m);
    for (std::size_t i = 0; i < m; ++i) kept[i] = i;
    return kept;
  }
  if (target == 0) return kept;

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<bool> alive(m, true);
  // best[i]: the alive partner j > i with the largest similarity (smallest j
  // on ties), or kNone.
  std::vector<std::size_t> best(m, kNone);
  auto refresh = [&](std::size_t i) {
    best[i] = kNone;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (!alive[j]) continue;
      if (best[i] == kNone || similarity.at(i, j) > similarity.at(i, best[i])) best[i] = j;
    }
  };
  for (std::size_t i = 0; i < m; ++i) refresh(i);

  // Returns true when token a should be discarded in favour of b.
  auto drop_first = [&](std::size_t a, std::size_t b) {
    if (relevances[a] != relevances[b]) return relevances[a] < relevances[b];
    if (tokens[a].normalized_time != tokens[b].normalized_time) {
      return tokens[a].normalized_time > tokens[b].normalized_time;
    }
    return a > b;
  };

  for (std::size_t removed = 0; removed < m - target; ++removed) {
    std::size_t pi = kNone;
    for (std::size_t i = 0; i < m; ++i) {
      if (!alive[i] || best[i] == kNone) continue;
      if (pi == kNone || similarity.at(i, best[i]) > similarity.at(pi, best[pi])) pi = i;
    }
    const std::size_t pj = best[pi];
    const std::size_t victim = drop_first(pi, pj) ? pi : pj;
    alive[victim] = false;
    for (std::size_t i = 0; i < victim; ++i) {
      if (alive[i] && best[i] == victim) refresh(i);
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (alive[i]) kept.push_back(i);
  }
  return kept;
}

}  // namespace tokensieve
