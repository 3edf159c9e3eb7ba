#include "seprank/numerics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace seprank {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                       double scale) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = scale * gauss(rng);
    }
  }
  return m;
}

std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_matrix(std::uint64_t h, const Matrix& m) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  h = hash_bytes(h, dims, sizeof(dims));
  return hash_bytes(h, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

int numerical_rank(const Matrix& m, const RankTolerance& tol) {
  validate(tol);
  if (m.size() == 0) {
    throw InputError("numerical_rank: matrix must be nonempty");
  }
  if (!m.allFinite()) {
    throw InputError("numerical_rank: matrix has a non-finite entry");
  }
  Eigen::BDCSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  if (sigma_max == 0.0) {
    return 0;
  }
  const double cutoff = tol.relative_threshold * sigma_max;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

BigCount binomial(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) {
    return 0;
  }
  k = std::min(k, n - k);
  BigCount result = 1;
  for (long long i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;  // exact: C(n-k+i, i) is an integer at every step
  }
  return result;
}

BigCount multiset_coeff(long long n, long long k) {
  if (n < 0 || k < 0) {
    throw InputError("multiset_coeff: arguments must be non-negative");
  }
  if (k == 0) {
    return 1;
  }
  if (n == 0) {
    return 0;
  }
  return binomial(n + k - 1, k);
}

double log_multiset(long long n, long long k) {
  return log_multiset_real(n, static_cast<double>(k));
}

double log_multiset_real(long long n, double k) {
  if (n < 0 || k < 0) {
    throw InputError("log_multiset: arguments must be non-negative");
  }
  if (k == 0) {
    return 0.0;
  }
  if (n == 0) {
    throw InputError("log_multiset: undefined for n = 0 with k > 0");
  }
  // ln C(n+k-1, k) = lnGamma(n+k) - lnGamma(k+1) - lnGamma(n)
  const double dn = static_cast<double>(n);
  return std::lgamma(dn + k) - std::lgamma(k + 1.0) - std::lgamma(dn);
}

BigCount pow3(int exponent) {
  if (exponent < 0) {
    throw InputError("pow3: exponent must be non-negative");
  }
  return boost::multiprecision::pow(BigCount(3), static_cast<unsigned>(exponent));
}

BigCount composition_count(int depth) {
  if (depth < 0) {
    throw InputError("composition_count: depth must be non-negative");
  }
  return (pow3(depth) - 1) / 2;
}

double log_big(const BigCount& value) {
  if (value <= 0) {
    throw InputError("log_big: value must be positive");
  }
  const std::size_t bits = boost::multiprecision::msb(value) + 1;
  if (bits <= 900) {
    return std::log(value.convert_to<double>());
  }
  const std::size_t shift = bits - 512;
  const double top = BigCount(value >> shift).convert_to<double>();
  return std::log(top) + static_cast<double>(shift) * std::log(2.0);
}

}  // namespace seprank
