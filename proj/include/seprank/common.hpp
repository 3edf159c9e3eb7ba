#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace seprank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BigCount = boost::multiprecision::cpp_int;
using Rng = std::mt19937_64;

/// Contract violation on the caller's side (bad shapes, out-of-range values).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The request is valid but exceeds what this implementation evaluates
/// (grid size caps, explicit-form depth limit).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration document; the message names the field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative singular-value cutoff for rank decisions: sigma_i counts toward
/// the rank iff sigma_i > relative_threshold * sigma_max.
struct RankTolerance {
  double relative_threshold = 1e-8;
};

inline void validate(const RankTolerance& tol) {
  if (!(tol.relative_threshold > 0.0 && tol.relative_threshold < 1.0)) {
    throw InputError("rank tolerance must lie in (0, 1), got " +
                     std::to_string(tol.relative_threshold));
  }
}

// Matricized grid tensors of deep compositions have noisier spectra than
// plain weight matrices, so they get a looser default cutoff.
inline constexpr RankTolerance kGridRankTolerance{1e-7};

/// i.i.d. N(0, scale^2) entries from the given generator, row by row.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                       double scale = 1.0);

/// FNV-1a over raw bytes, for cheap provenance hashes.
std::uint64_t hash_bytes(std::uint64_t seed_hash, const void* data,
                         std::size_t size);
std::uint64_t hash_matrix(std::uint64_t seed_hash, const Matrix& m);

}  // namespace seprank
