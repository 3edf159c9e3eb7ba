#pragma once

#include "seprank/common.hpp"

namespace seprank {

/// Tolerance-based numerical rank: the number of singular values above
/// tol.relative_threshold * sigma_max. The all-zero matrix has rank 0.
int numerical_rank(const Matrix& m, const RankTolerance& tol = {});

/// Exact binomial coefficient C(n, k); 0 outside the valid range.
BigCount binomial(long long n, long long k);

/// Multiset coefficient ((n k)) = C(n+k-1, k): the number of size-k
/// multisets over n symbols. ((0 0)) = 1, ((0 k>0)) = 0.
BigCount multiset_coeff(long long n, long long k);

/// ln ((n k)) via log-gamma. Requires n >= 1 when k > 0.
double log_multiset(long long n, long long k);

/// Same, with a real-valued k for arguments past the exact integer range.
double log_multiset_real(long long n, double k);

/// (3^depth - 1) / 2: the number of composition indices in the depth-L
/// explicit form of the attention stack.
BigCount composition_count(int depth);

BigCount pow3(int exponent);

/// Natural log of a positive big integer (works far past double range).
double log_big(const BigCount& value);

}  // namespace seprank
