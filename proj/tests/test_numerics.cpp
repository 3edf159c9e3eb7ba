#include "doctest.h"

#include "seprank/numerics.hpp"

#include <cmath>

using namespace seprank;

namespace {

// Independent oracle: #{(a_1..a_n) >= 0 integer : sum a_i = k}.
long long count_compositions(int n, int k) {
  if (n == 0) return k == 0 ? 1 : 0;
  long long total = 0;
  for (int first = 0; first <= k; ++first) {
    total += count_compositions(n - 1, k - first);
  }
  return total;
}

}  // namespace

TEST_CASE("numerical_rank on exact-rank matrices") {
  CHECK(numerical_rank(Matrix::Identity(3, 3)) == 3);

  Vector u(3), v(4);
  u << 1.0, -2.0, 0.5;
  v << 3.0, 1.0, -1.0, 2.0;
  CHECK(numerical_rank(u * v.transpose()) == 1);

  CHECK(numerical_rank(Matrix::Zero(4, 2)) == 0);
}

TEST_CASE("numerical_rank respects the relative tolerance") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 4.0000001;

  // Singular values by hand: the eigenvalues of A^T A solve a quadratic with
  // det(A^T A) = det(A)^2 = 1e-14 and trace ~25.0000008.
  const double tr = (a.transpose() * a).trace();
  const double det = std::pow(a.determinant(), 2);
  const double lam1 = (tr + std::sqrt(tr * tr - 4 * det)) / 2;
  const double lam2 = (tr - std::sqrt(tr * tr - 4 * det)) / 2;
  const double ratio = std::sqrt(lam2 / lam1);
  CHECK(ratio == doctest::Approx(4e-9).epsilon(0.1));

  CHECK(numerical_rank(a, RankTolerance{1e-3}) == 1);
  CHECK(numerical_rank(a, RankTolerance{1e-10}) == 2);
}

TEST_CASE("numerical_rank input validation") {
  Matrix bad(1, 2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(numerical_rank(bad), InputError);
  CHECK_THROWS_AS(numerical_rank(Matrix::Identity(2, 2), RankTolerance{0.0}),
                  InputError);
  CHECK_THROWS_AS(numerical_rank(Matrix::Identity(2, 2), RankTolerance{1.5}),
                  InputError);
}

TEST_CASE("numerical_rank invariances") {
  Rng rng(12345);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m = gaussian_matrix(5, 7, rng);
    if (trial % 2 == 0) {
      // Make it rank-deficient so the invariance is not vacuous.
      m.col(3) = 2.0 * m.col(0) - m.col(1);
      m.row(4) = m.row(0) + m.row(2);
    }
    const int base = numerical_rank(m);

    Matrix permuted = m;
    permuted.row(0).swap(permuted.row(3));
    permuted.col(1).swap(permuted.col(6));
    CHECK(numerical_rank(permuted) == base);

    std::uniform_real_distribution<double> scale_dist(0.5, 2.0);
    const double scale = scale_dist(rng) * (trial % 3 == 0 ? -1.0 : 1.0);
    CHECK(numerical_rank(scale * m) == base);
  }
}

TEST_CASE("multiset_coeff against brute-force enumeration") {
  for (int n = 0; n <= 6; ++n) {
    for (int k = 0; k <= 6; ++k) {
      CAPTURE(n);
      CAPTURE(k);
      CHECK(multiset_coeff(n, k) == BigCount(count_compositions(n, k)));
    }
  }
  CHECK(multiset_coeff(3, 0) == 1);
  CHECK(multiset_coeff(2, 3) == 4);
  CHECK(multiset_coeff(3, 2) == 6);
  CHECK(multiset_coeff(0, 5) == 0);
  CHECK(multiset_coeff(0, 0) == 1);
  CHECK_THROWS_AS(multiset_coeff(-1, 2), InputError);
}

TEST_CASE("multiset upper-bound inequality: ((n k)) <= (2e(n+k)/n)^n") {
  for (int n = 1; n <= 50; ++n) {
    for (int k = 1; k <= 50; ++k) {
      const double lhs = log_big(multiset_coeff(n, k));
      const double rhs =
          n * std::log(2.0 * std::exp(1.0) * (n + k) / static_cast<double>(n));
      CAPTURE(n);
      CAPTURE(k);
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("multiset lower-bound inequality: ((n k)) >= ((n+k-1)/(n-1))^(n-1)") {
  for (int n = 2; n <= 50; ++n) {
    for (int k = 1; k <= 50; ++k) {
      const double lhs = log_big(multiset_coeff(n, k));
      const double rhs =
          (n - 1) * std::log((n + k - 1.0) / (n - 1.0));
      CAPTURE(n);
      CAPTURE(k);
      CHECK(lhs >= rhs - 1e-9);
    }
  }
}

TEST_CASE("log_multiset agrees with the exact value") {
  for (int n = 1; n <= 59; ++n) {
    for (int k = 0; n + k <= 60; ++k) {
      const double exact = log_big(multiset_coeff(n, k) > 0
                                       ? multiset_coeff(n, k)
                                       : BigCount(1));
      CHECK(std::abs(log_multiset(n, k) - exact) <= 1e-9);
    }
  }
  CHECK(log_multiset(2, 3) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(log_multiset(7, 0) == 0.0);
  CHECK(log_multiset(1, 13) == 0.0);
  CHECK_THROWS_AS(log_multiset(0, 1), InputError);
}

TEST_CASE("composition_count") {
  CHECK(composition_count(1) == 1);
  CHECK(composition_count(2) == 4);
  CHECK(composition_count(3) == 13);
  for (int depth = 0; depth <= 20; ++depth) {
    CHECK(2 * composition_count(depth) + 1 == pow3(depth));
  }
}

TEST_CASE("log_big handles values past double range") {
  const BigCount huge = boost::multiprecision::pow(BigCount(10), 400);
  CHECK(log_big(huge) == doctest::Approx(400 * std::log(10.0)).epsilon(1e-10));
  CHECK(log_big(BigCount(1)) == 0.0);
  CHECK_THROWS_AS(log_big(BigCount(0)), InputError);
}
