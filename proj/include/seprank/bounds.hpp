#pragma once

#include "seprank/common.hpp"
#include "seprank/numerics.hpp"

#include <optional>
#include <string>

namespace seprank {

struct BoundInputs {
  int depth = 1;            // L
  int width = 1;            // d_x
  int embedding_rank = 1;   // r; min(r, width) governs every bound
  int positional_rank = 1;  // r_e
  int heads = 1;            // H
  std::optional<long long> vocab_size;  // V, optional
  std::optional<long long> seq_len;     // N, optional
};

enum class VocabStatus { ok, too_small, large_n_regime };

struct AssumptionFlags {
  bool depth_ok = false;  // L > log3(width)
  bool heads_ok = false;  // H < min(r, width)
  VocabStatus vocab = VocabStatus::large_n_regime;
};

/// Exact separation-rank ceiling:
///   ((r+r_e over 3^L)) * ((4 over 3^L)) * (3^L + 1)^(r + r_e)
/// with r clamped to min(r, width). The exact product is reported whenever
/// 3^L fits a 64-bit integer; the log form is always available.
struct UpperBound {
  std::optional<BigCount> exact;
  double log_value = 0.0;
};
UpperBound upper_bound(const BoundInputs& in);

/// Separation-rank floor ((floor((r-H)/2) over 3^(L-2))), degenerate (= 1)
/// when H >= r. Requires depth >= 2.
struct LowerBound {
  std::optional<BigCount> exact;
  double log_value = 0.0;
  AssumptionFlags flags;
};
LowerBound lower_bound(const BoundInputs& in);

/// Leading-order log-separation-rank scales, constants suppressed:
/// upper L*min(r,dx), lower L*(min(r,dx)-H).
struct AsymptoticScales {
  double upper_scale = 0.0;
  double lower_scale = 0.0;
};
AsymptoticScales asymptotic_logs(const BoundInputs& in);

enum class DepthRegime { depth_efficiency, dual_contribution, boundary };

struct DepthRegimeResult {
  DepthRegime regime = DepthRegime::boundary;
  double threshold = 0.0;  // log3(width)
};

/// Classifies depth against the log3(width) threshold; |L - threshold| < 0.5
/// is reported as the boundary.
DepthRegimeResult depth_regime(int depth, int width);

std::string to_string(DepthRegime r);
std::string to_string(VocabStatus s);

struct BoundReport {
  UpperBound upper;
  std::optional<LowerBound> lower;  // absent when depth < 2
  AsymptoticScales scales;
  DepthRegimeResult regime;
};
BoundReport bound_report(const BoundInputs& in);

}  // namespace seprank
