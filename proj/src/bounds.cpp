#include "seprank/bounds.hpp"

#include <cmath>

namespace seprank {

namespace {

constexpr int kMaxExactPow3 = 39;  // 3^40 overflows int64

void check_inputs(const BoundInputs& in) {
  if (in.depth < 1 || in.width < 1 || in.embedding_rank < 1 ||
      in.positional_rank < 1 || in.heads < 1) {
    throw InputError("bound inputs must be positive");
  }
  if (in.vocab_size && *in.vocab_size < 1) {
    throw InputError("vocab_size must be positive when given");
  }
}

int effective_rank(const BoundInputs& in) {
  return std::min(in.embedding_rank, in.width);
}

// log(3^e + 1) without forming the power.
double log_pow3_plus_1(int e) {
  const double l = e * std::log(3.0);
  return l + std::log1p(std::exp(-l));
}

}  // namespace

UpperBound upper_bound(const BoundInputs& in) {
  check_inputs(in);
  const long long re = in.positional_rank;
  const long long r = effective_rank(in);
  UpperBound ub;
  ub.log_value = log_multiset_real(r + re, std::pow(3.0, in.depth)) +
                 log_multiset_real(4, std::pow(3.0, in.depth)) +
                 static_cast<double>(r + re) * log_pow3_plus_1(in.depth);
  if (in.depth <= kMaxExactPow3) {
    const long long k = pow3(in.depth).convert_to<long long>();
    ub.exact = multiset_coeff(r + re, k) * multiset_coeff(4, k) *
               boost::multiprecision::pow(BigCount(k + 1),
                                          static_cast<unsigned>(r + re));
  }
  return ub;
}

LowerBound lower_bound(const BoundInputs& in) {
  check_inputs(in);
  if (in.depth < 2) {
    throw InputError("lower_bound: requires depth >= 2 (3^(L-2) must be defined)");
  }
  const int r = effective_rank(in);
  LowerBound lb;
  lb.flags.depth_ok = in.depth > depth_regime(in.depth, in.width).threshold;
  lb.flags.heads_ok = in.heads < r;

  const long long d = lb.flags.heads_ok ? (static_cast<long long>(r) - in.heads) / 2 : 0;
  const int power_exp = in.depth - 2;
  if (!lb.flags.heads_ok || d == 0) {
    // Degenerate: any nonzero function still has separation rank >= 1.
    lb.exact = BigCount(1);
    lb.log_value = 0.0;
  } else if (power_exp <= kMaxExactPow3) {
    const long long k = pow3(power_exp).convert_to<long long>();
    BigCount exact = multiset_coeff(d, k);
    if (exact < 1) exact = 1;
    lb.log_value = log_big(exact);
    lb.exact = std::move(exact);
  } else {
    lb.log_value = log_multiset_real(d, std::pow(3.0, power_exp));
  }

  if (in.vocab_size) {
    if (lb.exact) {
      lb.flags.vocab = (*in.vocab_size >= 2 * *lb.exact + 1) ? VocabStatus::ok
                                                             : VocabStatus::too_small;
    } else {
      lb.flags.vocab = (std::log(static_cast<double>(*in.vocab_size)) >=
                        std::log(2.0) + lb.log_value)
                           ? VocabStatus::ok
                           : VocabStatus::too_small;
    }
  } else {
    lb.flags.vocab = VocabStatus::large_n_regime;
  }
  return lb;
}

AsymptoticScales asymptotic_logs(const BoundInputs& in) {
  check_inputs(in);
  const double r = effective_rank(in);
  return {static_cast<double>(in.depth) * r,
          static_cast<double>(in.depth) * (r - in.heads)};
}

DepthRegimeResult depth_regime(int depth, int width) {
  if (width < 1 || depth < 0) {
    throw InputError("depth_regime: width must be >= 1 and depth >= 0");
  }
  DepthRegimeResult res;
  res.threshold = std::log(static_cast<double>(width)) / std::log(3.0);
  if (std::abs(depth - res.threshold) < 0.5) {
    res.regime = DepthRegime::boundary;
  } else if (depth > res.threshold) {
    res.regime = DepthRegime::dual_contribution;
  } else {
    res.regime = DepthRegime::depth_efficiency;
  }
  return res;
}

std::string to_string(DepthRegime r) {
  switch (r) {
    case DepthRegime::depth_efficiency: return "depth_efficiency";
    case DepthRegime::dual_contribution: return "dual_contribution";
    case DepthRegime::boundary: return "boundary";
  }
  return "unknown";
}

std::string to_string(VocabStatus s) {
  switch (s) {
    case VocabStatus::ok: return "ok";
    case VocabStatus::too_small: return "too_small";
    case VocabStatus::large_n_regime: return "large_n_regime";
  }
  return "unknown";
}

BoundReport bound_report(const BoundInputs& in) {
  BoundReport rep;
  rep.upper = upper_bound(in);
  if (in.depth >= 2) {
    rep.lower = lower_bound(in);
  }
  rep.scales = asymptotic_logs(in);
  rep.regime = depth_regime(in.depth, in.width);
  return rep;
}

}  // namespace seprank
