#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tokensieve/relevance.hpp"

using namespace tokensieve;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (auto& x : m.data) x = n(rng);
  return m;
}

}  // namespace

TEST_SUITE("relevance") {

TEST_CASE("max over queries of head sums") {
  AttentionTensor a(1, 2, 2);
  a.weights = {0.7, 0.3, 0.2, 0.8};
  CHECK(relevance_from_attention(a) == RelevanceScores{0.7, 0.8});

  AttentionTensor b(2, 2, 2);
  b.weights = {0.7, 0.3, 0.2, 0.8, 0.7, 0.3, 0.2, 0.8};
  const auto r = relevance_from_attention(b);
  CHECK(r[0] == doctest::Approx(1.4));
  CHECK(r[1] == doctest::Approx(1.6));

  AttentionTensor single(2, 1, 3);
  single.weights = {0.1, 0.2, 0.3, 0.4, 0.1, 0.0};
  const auto s = relevance_from_attention(single);
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.3));
  CHECK(s[2] == doctest::Approx(0.3));
}

TEST_CASE("attention preconditions") {
  AttentionTensor a(1, 1, 2);
  a.weights = {0.7, 0.3};
  CHECK_THROWS_AS(relevance_from_attention(a, 3), std::invalid_argument);
  a.weights = {-0.1, 0.3};
  CHECK_THROWS_AS(relevance_from_attention(a), std::invalid_argument);
  a.weights = {0.8, 0.3};
  CHECK_THROWS_AS(relevance_from_attention(a), std::invalid_argument);
  a.weights = {0.6, 0.3};  // sub-normalized rows are allowed
  CHECK_NOTHROW(relevance_from_attention(a));
}

TEST_CASE("two-key softmax closed forms") {
  Matrix q(1, 1);
  q(0, 0) = 1.0;
  Matrix k(2, 1);
  k(0, 0) = 0.25;
  k(1, 0) = 0.25;
  auto r = relevance_from_qk(q, k, 1);
  CHECK(r[0] == doctest::Approx(0.5));
  CHECK(r[1] == doctest::Approx(0.5));

  k(0, 0) = std::log(3.0);
  k(1, 0) = 0.0;
  r = relevance_from_qk(q, k, 1);
  CHECK(r[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("head width must divide the feature dimension") {
  Matrix q(1, 6), k(3, 6);
  CHECK_THROWS_AS(relevance_from_qk(q, k, 4), std::invalid_argument);
  Matrix k5(3, 5);
  CHECK_THROWS_AS(relevance_from_qk(q, k5, 2), std::invalid_argument);
  CHECK_THROWS_AS(relevance_from_qk(q, k, 0), std::invalid_argument);
}

TEST_CASE("query-key path matches the naive oracle") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const std::size_t h = 1 + rng() % 4;
    const std::size_t d = h * (1 + rng() % 8);
    const std::size_t t = 1 + rng() % 5;
    const std::size_t v = 1 + rng() % 30;
    const Matrix q = random_matrix(rng, t, d, 2.0);
    const Matrix k = random_matrix(rng, v, d, 2.0);
    const auto got = relevance_from_qk(q, k, h);
    const auto want = oracle::qk_relevance(q, k, h);
    REQUIRE(got.size() == v);
    for (std::size_t j = 0; j < v; ++j) CHECK(std::abs(got[j] - want[j]) < 1e-9);
    const auto via_tensor = relevance_from_attention(materialize_attention(q, k, h));
    CHECK(via_tensor == got);
  }
}

TEST_CASE("single head and query gives a distribution") {
  std::mt19937_64 rng(9);
  const auto r = relevance_from_qk(random_matrix(rng, 1, 8), random_matrix(rng, 12, 8), 1);
  CHECK(std::accumulate(r.begin(), r.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("shift and permutation invariance") {
  std::mt19937_64 rng(13);
  const Matrix q = random_matrix(rng, 3, 8);
  const Matrix k = random_matrix(rng, 10, 8);
  // Adding q_t to every key shifts each of query t's logits by |q_t|^2; only
  // T = 1 keeps the other queries untouched, so use a single query.
  Matrix q1(1, 8);
  for (std::size_t c = 0; c < 8; ++c) q1(0, c) = q(0, c);
  Matrix shifted = k;
  for (std::size_t v = 0; v < k.rows; ++v) {
    for (std::size_t c = 0; c < 8; ++c) shifted(v, c) += q1(0, c);
  }
  const auto base = relevance_from_qk(q1, k, 1);
  const auto moved = relevance_from_qk(q1, shifted, 1);
  for (std::size_t v = 0; v < k.rows; ++v) CHECK(std::abs(base[v] - moved[v]) < 1e-9);

  std::vector<std::size_t> perm(k.rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix pk(k.rows, k.cols);
  for (std::size_t v = 0; v < k.rows; ++v) {
    for (std::size_t c = 0; c < k.cols; ++c) pk(v, c) = k(perm[v], c);
  }
  const auto r = relevance_from_qk(q, k, 2);
  const auto pr = relevance_from_qk(q, pk, 2);
  for (std::size_t v = 0; v < k.rows; ++v) CHECK(std::abs(pr[v] - r[perm[v]]) < 1e-12);
}

TEST_CASE("scores stay within the head count") {
  std::mt19937_64 rng(17);
  const auto r = relevance_from_qk(random_matrix(rng, 4, 16, 3.0), random_matrix(rng, 20, 16, 3.0), 4);
  for (double x : r) {
    CHECK(x >= 0.0);
    CHECK(x <= 4.0 + 1e-12);
  }
}

TEST_CASE("trace relevance dispatches on the source") {
  GroupTrace g;
  AttentionTensor a(1, 2, 2);
  a.weights = {0.7, 0.3, 0.2, 0.8};
  g.attention = a;
  g.tokens.resize(2);
  CHECK(relevance_for(g) == RelevanceScores{0.7, 0.8});
  g.tokens.resize(3);
  CHECK_THROWS_AS(relevance_for(g), std::invalid_argument);
}

}
