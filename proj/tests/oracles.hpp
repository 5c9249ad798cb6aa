#pragma once

// Reference implementations used only by the tests. They favour the most
// literal formulation over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "tokensieve/core.hpp"

namespace oracle {

inline double entropy(const std::vector<double>& p) {
  long double h = 0.0L;
  for (double x : p) {
    if (x >= 1e-12) h -= static_cast<long double>(x) * std::log(static_cast<long double>(x));
  }
  return static_cast<double>(h);
}

/// Mean of the ceil(n / 10) smallest values, computed with integer rounding.
inline double bottom_tenth_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t k = std::max<std::size_t>(1, (values.size() + 9) / 10);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += values[i];
  return sum / static_cast<double>(k);
}

/// Smallest achievable L1 distance between an integer allocation (summing to
/// budget, within caps) and the ideal real-valued shares.
inline double best_l1(const std::vector<double>& ideal, const std::vector<std::int64_t>& caps,
                      std::int64_t budget) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> cur(ideal.size(), 0);
  auto rec = [&](auto&& self, std::size_t g, std::int64_t left) -> void {
    if (g + 1 == ideal.size()) {
      if (left > caps[g]) return;
      cur[g] = left;
      double d = 0.0;
      for (std::size_t i = 0; i < ideal.size(); ++i) d += std::abs(static_cast<double>(cur[i]) - ideal[i]);
      best = std::min(best, d);
      return;
    }
    for (std::int64_t x = 0; x <= std::min(left, caps[g]); ++x) {
      cur[g] = x;
      self(self, g + 1, left - x);
    }
  };
  rec(rec, 0, budget);
  return best;
}

/// r_v = max_t sum_h softmax_v(q_t^h . k_v^h / sqrt(d/H)), evaluated naively.
inline std::vector<double> qk_relevance(const tokensieve::Matrix& q, const tokensieve::Matrix& k,
                                        std::size_t heads) {
  const std::size_t d = q.cols;
  const std::size_t hd = d / heads;
  const long double scale = 1.0L / std::sqrt(static_cast<long double>(hd));
  std::vector<double> r(k.rows, -std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < q.rows; ++t) {
    std::vector<long double> total(k.rows, 0.0L);
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<long double> logit(k.rows);
      for (std::size_t v = 0; v < k.rows; ++v) {
        long double dot = 0.0L;
        for (std::size_t c = h * hd; c < (h + 1) * hd; ++c) dot += static_cast<long double>(q(t, c)) * k(v, c);
        logit[v] = dot * scale;
      }
      const long double mx = *std::max_element(logit.begin(), logit.end());
      long double z = 0.0L;
      for (auto& x : logit) z += (x = std::exp(x - mx));
      for (std::size_t v = 0; v < k.rows; ++v) total[v] += logit[v] / z;
    }
    for (std::size_t v = 0; v < k.rows; ++v) r[v] = std::max(r[v], static_cast<double>(total[v]));
  }
  return r;
}

/// Naive similarity: cosine plus exp(-dt^2 / sigma).
inline double similarity(const tokensieve::TokenRecord& x, const tokensieve::TokenRecord& y, double sigma) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < x.feature.size(); ++c) {
    dot += x.feature[c] * y.feature[c];
    na += x.feature[c] * x.feature[c];
    nb += y.feature[c] * y.feature[c];
  }
  const double gap = x.normalized_time - y.normalized_time;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0) + std::exp(-(gap * gap) / sigma);
}

/// Greedy removal with the full pair search redone after every drop.
template <class Sim>
std::vector<std::size_t> greedy_removal(const std::vector<tokensieve::TokenRecord>& tokens,
                                        const std::vector<double>& relevance, Sim sim,
                                        std::size_t target) {
  const std::size_t m = tokens.size();
  std::vector<bool> alive(m, true);
  std::size_t left = m;
  while (left > target) {
    std::size_t bi = 0, bj = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (!alive[i] || !alive[j]) continue;
        const double s = sim(i, j);
        if (s > best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    }
    if (best == -std::numeric_limits<double>::infinity()) {
      // A lone survivor has no partner; it goes when the target is zero.
      for (std::size_t i = 0; i < m; ++i) alive[i] = false;
      break;
    }
    std::size_t drop = bj;
    if (relevance[bi] != relevance[bj]) {
      drop = relevance[bi] < relevance[bj] ? bi : bj;
    } else if (tokens[bi].normalized_time != tokens[bj].normalized_time) {
      drop = tokens[bi].normalized_time > tokens[bj].normalized_time ? bi : bj;
    }
    alive[drop] = false;
    --left;
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < m; ++i) {
    if (alive[i]) kept.push_back(i);
  }
  return kept;
}

/// Random point on the probability simplex; some entries may be exactly zero.
inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t d) {
  std::exponential_distribution<double> ex(1.0);
  std::bernoulli_distribution zero(0.1);
  std::vector<double> p(d);
  double s = 0.0;
  for (auto& x : p) s += (x = zero(rng) ? 0.0 : ex(rng));
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace oracle
