#include "seprank/witness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace seprank {

namespace {

enum class Slot { first_half, second_half, ones };

// coordinate is 1-based. The ones slot is the last slot of each
// attn_dim-sized block; the remaining slots split into a leading and a
// trailing half.
Slot slot_of(int coordinate, int attn_dim) {
  const int m = (coordinate - 1) % attn_dim;
  if (m == attn_dim - 1) return Slot::ones;
  return 2 * m < attn_dim - 1 ? Slot::first_half : Slot::second_half;
}

int require_int(const BigCount& v, const char* what) {
  if (v > std::numeric_limits<int>::max()) {
    throw InputError(std::string(what) + " is too large for a desk-scale witness");
  }
  return v.convert_to<int>();
}

void require_odd_attn_dim(int attn_dim) {
  if (attn_dim < 3 || attn_dim % 2 == 0) {
    throw InputError(
        "witness constructions assume an odd attention dimension >= 3 "
        "(the block layout splits attn_dim-1 carrying slots into two halves)");
  }
}

}  // namespace

WitnessMatrix make_witness_matrix(
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> entries) {
  if (entries.rows() < 1 || entries.cols() < 1) {
    throw InputError("witness matrix must be nonempty");
  }
  if ((entries.array() < 0).any()) {
    throw InputError("witness matrix entries must be non-negative integers");
  }
  WitnessMatrix w;
  w.row_norm_sq = entries.row(0).squaredNorm();
  for (Eigen::Index i = 1; i < entries.rows(); ++i) {
    if (entries.row(i).squaredNorm() != w.row_norm_sq) {
      throw InputError("witness matrix rows must share one squared norm; row " +
                       std::to_string(i + 1) + " differs");
    }
  }
  w.entries = std::move(entries);
  return w;
}

int phi_index(int j, int attn_dim) {
  if (j < 1 || attn_dim < 2) {
    throw InputError("phi_index: needs j >= 1 and attn_dim >= 2");
  }
  return ((j - 1) / attn_dim) * (attn_dim - 1) + ((j - 1) % attn_dim) + 1;
}

bool verify_hadamard_rank(const WitnessMatrix& a, int hadamard_power,
                          const RankTolerance& tol) {
  if (hadamard_power < 1) {
    throw InputError("hadamard power must be >= 1");
  }
  const int expected_rows = require_int(
      multiset_coeff(a.cols(), hadamard_power), "((d over power))");
  if (a.rows() != expected_rows) {
    throw InputError("witness matrix must have ((d over power)) = " +
                     std::to_string(expected_rows) + " rows, got " +
                     std::to_string(a.rows()));
  }
  const Matrix af = a.entries.cast<double>();
  const Matrix gram = af * af.transpose();
  const Matrix powered = gram.array().pow(hadamard_power).matrix();
  return numerical_rank(powered, tol) == expected_rows;
}

namespace {

// All non-negative integer vectors of length dim with squared norm norm_sq,
// in lexicographic order.
void enumerate_rows(int dim, long long norm_sq, std::vector<long long>& prefix,
                    std::vector<std::vector<long long>>& out) {
  if (dim == 0) {
    if (norm_sq == 0) out.push_back(prefix);
    return;
  }
  const long long max_entry = static_cast<long long>(std::sqrt(static_cast<double>(norm_sq))) + 1;
  for (long long v = 0; v <= max_entry; ++v) {
    const long long sq = v * v;
    if (sq > norm_sq) break;
    prefix.push_back(v);
    enumerate_rows(dim - 1, norm_sq - sq, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::optional<WitnessMatrix> search_hadamard_witness(int dim, int hadamard_power,
                                                     std::uint64_t seed,
                                                     int max_trials) {
  if (dim < 1 || hadamard_power < 1) {
    throw InputError("search_hadamard_witness: dim and power must be >= 1");
  }
  const int rows = require_int(multiset_coeff(dim, hadamard_power),
                               "((d over power))");
  if (dim == 1) {
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> one(1, 1);
    one(0, 0) = 1;
    return make_witness_matrix(std::move(one));
  }

  // Squared norms with rich families of integer solutions (Pythagorean-style).
  const long long candidate_norms[] = {25, 50, 100, 169, 225, 325, 625, 1105};
  Rng rng(seed);
  int trials = 0;
  for (long long norm_sq : candidate_norms) {
    std::vector<std::vector<long long>> pool;
    std::vector<long long> prefix;
    enumerate_rows(dim, norm_sq, prefix, pool);
    if (static_cast<int>(pool.size()) < rows) continue;
    while (trials < max_trials) {
      ++trials;
      std::shuffle(pool.begin(), pool.end(), rng);
      Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> entries(rows, dim);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < dim; ++j) entries(i, j) = pool[i][j];
      }
      WitnessMatrix w = make_witness_matrix(std::move(entries));
      if (verify_hadamard_rank(w, hadamard_power)) {
        return w;
      }
    }
  }
  return std::nullopt;
}

double witness_target_entry(const WitnessMatrix& a, int attn_dim, int token,
                            int coordinate) {
  const int half = (attn_dim - 1) / 2;
  const int m_rows = a.rows();
  const int d = a.cols();
  switch (slot_of(coordinate, attn_dim)) {
    case Slot::ones:
      return 1.0;
    case Slot::first_half: {
      const int col = phi_index(coordinate, attn_dim);
      if (token <= m_rows && col <= d) {
        return static_cast<double>(a.entries(token - 1, col - 1));
      }
      return 0.0;
    }
    case Slot::second_half: {
      const int col = phi_index(coordinate - half, attn_dim);
      if (token > m_rows && token <= 2 * m_rows && col <= d) {
        return static_cast<double>(a.entries(token - m_rows - 1, col - 1));
      }
      return 0.0;
    }
  }
  return 0.0;
}

double summed_target_entry(const WitnessMatrix& a, int attn_dim, int j1, int j2,
                           double ones_value, int coordinate) {
  const int half = (attn_dim - 1) / 2;
  const int d = a.cols();
  switch (slot_of(coordinate, attn_dim)) {
    case Slot::ones:
      return ones_value;
    case Slot::first_half: {
      const int col = phi_index(coordinate, attn_dim);
      return col <= d ? static_cast<double>(a.entries(j1 - 1, col - 1)) : 0.0;
    }
    case Slot::second_half: {
      const int col = phi_index(coordinate - half, attn_dim);
      return col <= d ? static_cast<double>(a.entries(j2 - 1, col - 1)) : 0.0;
    }
  }
  return 0.0;
}

int AssignmentBundle::width() const {
  if (!conv_kernel.empty()) return static_cast<int>(conv_kernel[0].rows());
  return static_cast<int>(vocab_matrix.rows());
}

namespace {

void check_vocab_preconditions(const WitnessMatrix& a, int width, int attn_dim,
                               int heads, int rank_budget, int power) {
  require_odd_attn_dim(attn_dim);
  if (heads < 1) throw InputError("witness: heads must be >= 1");
  if (width < attn_dim) {
    throw InputError("witness: width must be at least attn_dim (one full block)");
  }
  if (rank_budget - heads != 2 * a.cols()) {
    throw InputError(
        "witness: the construction needs r - H == 2 * d with d = A's column count; got r - H = " +
        std::to_string(rank_budget - heads) + ", 2d = " + std::to_string(2 * a.cols()));
  }
  const int expected_rows = require_int(multiset_coeff(a.cols(), power),
                                        "((d over 3^(L-2)))");
  if (a.rows() != expected_rows) {
    throw InputError("witness: A must have ((d over 3^(L-2))) = " +
                     std::to_string(expected_rows) + " rows, got " +
                     std::to_string(a.rows()));
  }
}

// The Hadamard power is implied by A's shape: rows == ((cols over power)).
int recover_power(const WitnessMatrix& a) {
  for (int p = 1; p <= 64; ++p) {
    const BigCount m = multiset_coeff(a.cols(), p);
    if (m == a.rows()) return p;
    if (m > a.rows()) break;
  }
  throw InputError(
      "witness: A's row count is not ((d over p)) for any power p >= 1");
}

}  // namespace

AssignmentBundle build_vocab_witness(const WitnessMatrix& a, int width,
                                     int attn_dim, int heads, int rank_budget,
                                     int depth) {
  if (depth < 2) {
    throw InputError("witness: the lower-bound construction needs depth >= 2");
  }
  const int power = require_int(pow3(depth - 2), "3^(L-2)");
  check_vocab_preconditions(a, width, attn_dim, heads, rank_budget, power);

  AssignmentBundle bundle;
  bundle.kind = AssignmentBundle::Kind::vocab;
  bundle.a = a;
  bundle.attn_dim = attn_dim;
  bundle.heads = heads;
  bundle.rank_budget = rank_budget;
  bundle.block_cols = a.cols();
  bundle.power = power;

  const int vocab_size = 2 * a.rows() + 1;
  bundle.vocab_matrix = Matrix(width, vocab_size);
  for (int alpha = 1; alpha <= width; ++alpha) {
    for (int token = 1; token <= vocab_size; ++token) {
      bundle.vocab_matrix(alpha - 1, token - 1) =
          witness_target_entry(a, attn_dim, token, alpha);
    }
  }
  bundle.positional = Matrix{};
  bundle.template_tokens.resize(vocab_size);
  std::iota(bundle.template_tokens.begin(), bundle.template_tokens.end(), 0);

  if (numerical_rank(bundle.vocab_matrix) > rank_budget) {
    throw InputError("witness: constructed vocabulary matrix exceeds the rank budget");
  }
  return bundle;
}

AssignmentBundle build_conv_witness(const WitnessMatrix& a, int width,
                                    int attn_dim, int heads, int rank_budget,
                                    int input_dim, int kernel_width) {
  const int power = recover_power(a);
  check_vocab_preconditions(a, width, attn_dim, heads, rank_budget, power);
  if (kernel_width < 1 || input_dim < 1) {
    throw InputError("witness: kernel_width and input_dim must be >= 1");
  }
  if (kernel_width * input_dim < width) {
    throw InputError(
        "witness: kernel_width * input_dim must cover every output coordinate "
        "(need >= width = " + std::to_string(width) + ")");
  }
  // Unlike the vocabulary case, the indicator kernel's ones rows each read a
  // distinct input channel, so every ones slot costs one unit of rank.
  if (width / attn_dim > heads) {
    throw InputError(
        "witness: the indicator kernel stays within the rank budget only when "
        "floor(width / attn_dim) <= heads (each ones slot adds rank 1); need "
        "width <= " + std::to_string(attn_dim * heads + attn_dim - 1));
  }

  AssignmentBundle bundle;
  bundle.kind = AssignmentBundle::Kind::conv;
  bundle.a = a;
  bundle.attn_dim = attn_dim;
  bundle.heads = heads;
  bundle.rank_budget = rank_budget;
  bundle.block_cols = a.cols();
  bundle.power = power;

  // Indicator kernel: slice l reads raw coordinate lam into output
  // coordinate alpha = kernel_width*(lam-1) + l, but only for slots the
  // pattern can occupy.
  const int d = a.cols();
  const int half = (attn_dim - 1) / 2;
  auto carrying = [&](int alpha) {
    switch (slot_of(alpha, attn_dim)) {
      case Slot::ones:
        return true;
      case Slot::first_half:
        return phi_index(alpha, attn_dim) <= d;
      case Slot::second_half:
        return phi_index(alpha - half, attn_dim) <= d;
    }
    return false;
  };

  bundle.conv_kernel.assign(kernel_width, Matrix::Zero(width, input_dim));
  for (int lam = 1; lam <= input_dim; ++lam) {
    for (int l = 1; l <= kernel_width; ++l) {
      const int alpha = kernel_width * (lam - 1) + l;
      if (alpha <= width && carrying(alpha)) {
        bundle.conv_kernel[l - 1](alpha - 1, lam - 1) = 1.0;
      }
    }
  }
  bundle.positional = Matrix{};

  const int vocab_size = 2 * a.rows() + 1;
  bundle.template_tokens.resize(vocab_size);
  std::iota(bundle.template_tokens.begin(), bundle.template_tokens.end(), 0);
  bundle.token_patches.resize(vocab_size);
  for (int token = 1; token <= vocab_size; ++token) {
    auto& patch = bundle.token_patches[token - 1];
    patch.assign(kernel_width, Vector::Zero(input_dim));
    for (int l = 1; l <= kernel_width; ++l) {
      for (int lam = 1; lam <= input_dim; ++lam) {
        const int alpha = kernel_width * (lam - 1) + l;
        patch[l - 1](lam - 1) = witness_target_entry(a, attn_dim, token, alpha);
      }
    }
  }

  ConvEmbedding emb{bundle.conv_kernel, Matrix{}};
  if (numerical_rank(emb.reshaped_kernel()) > rank_budget) {
    throw InputError("witness: constructed kernel exceeds the rank budget");
  }
  return bundle;
}

AssignmentBundle build_largeN_witness(const WitnessMatrix& a, int width,
                                      int attn_dim, int heads, int rank_budget,
                                      int seq_len) {
  require_odd_attn_dim(attn_dim);
  if (heads < 1) throw InputError("witness: heads must be >= 1");
  const int d = a.cols();
  if (attn_dim != 2 * d + 1) {
    throw InputError(
        "witness: the first-layer summation pattern is consistent only when "
        "attn_dim == 2d + 1 (one block carries both halves of an A row); need "
        "attn_dim = " + std::to_string(2 * d + 1));
  }
  if (rank_budget != 2 * d + 1 + heads) {
    throw InputError("witness: the construction needs r == 2d + 1 + H; need r = " +
                     std::to_string(2 * d + 1 + heads));
  }
  if (width < attn_dim) {
    throw InputError("witness: width must be at least attn_dim");
  }
  const long long max_entry = a.entries.maxCoeff();
  if (max_entry < 1) {
    throw InputError("witness: A must have a positive entry");
  }
  const long long min_seq = max_entry * static_cast<long long>(rank_budget - 1 - heads);
  if (seq_len < min_seq || seq_len % 2 != 0) {
    throw InputError("witness: seq_len must be even and >= max_entry(A) * (r-1-H) = " +
                     std::to_string(min_seq));
  }

  AssignmentBundle bundle;
  bundle.kind = AssignmentBundle::Kind::large_n;
  bundle.a = a;
  bundle.attn_dim = attn_dim;
  bundle.heads = heads;
  bundle.rank_budget = rank_budget;
  bundle.block_cols = d;
  bundle.seq_len = seq_len;

  // One-hot-style vocabulary: tokens 2..r-H light up the coordinate whose
  // phi value is token-1; every token lights the ones slots.
  const int vocab_size = rank_budget;
  bundle.vocab_matrix = Matrix::Zero(width, vocab_size);
  for (int alpha = 1; alpha <= width; ++alpha) {
    if (slot_of(alpha, attn_dim) == Slot::ones) {
      bundle.vocab_matrix.row(alpha - 1).setOnes();
      continue;
    }
    const int token = phi_index(alpha, attn_dim) + 1;
    if (token >= 2 && token <= rank_budget - heads) {
      bundle.vocab_matrix(alpha - 1, token - 1) = 1.0;
    }
  }
  bundle.positional = Matrix{};
  bundle.template_tokens.resize(vocab_size);
  std::iota(bundle.template_tokens.begin(), bundle.template_tokens.end(), 0);

  // Key/query selector: score(i, j) = y_i[attn_dim] * y_j[attn_dim] = 1.
  bundle.first_key_query = Matrix::Zero(attn_dim, width);
  bundle.first_key_query(0, attn_dim - 1) = 1.0;

  // Repetition maps: side P spells row j1 of A with tokens 2..d+1, side Q
  // spells row j2 with tokens d+2..2d+1; segment s of length max_entry
  // repeats its token A(j, s) times and pads with token 1.
  const int half_len = seq_len / 2;
  bundle.pi_p.assign(a.rows(), std::vector<int>(half_len, 0));
  bundle.pi_q.assign(a.rows(), std::vector<int>(half_len, 0));
  for (int j = 0; j < a.rows(); ++j) {
    for (int t = 0; t < half_len; ++t) {
      const int seg = t / static_cast<int>(max_entry);
      const int off = t % static_cast<int>(max_entry);
      if (seg < d && off < a.entries(j, seg)) {
        bundle.pi_p[j][t] = seg + 1;          // 0-based token seg+1 = id "seg+2"
        bundle.pi_q[j][t] = seg + 1 + d;
      } else {
        bundle.pi_p[j][t] = 0;
        bundle.pi_q[j][t] = 0;
      }
    }
  }

  if (numerical_rank(bundle.vocab_matrix) > rank_budget) {
    throw InputError("witness: constructed vocabulary matrix exceeds the rank budget");
  }
  return bundle;
}

namespace {

VerifyResult fail(std::string detail) { return {false, std::move(detail)}; }

VerifyResult verify_vocab_bundle(const AssignmentBundle& bundle, std::uint64_t seed) {
  const VocabEmbedding emb{bundle.vocab_matrix, Matrix{},
                           static_cast<int>(bundle.vocab_matrix.cols())};
  const int vocab_size = static_cast<int>(bundle.vocab_matrix.cols());
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, vocab_size - 1);

  std::vector<std::vector<int>> sequences;
  std::vector<int> all(vocab_size);
  std::iota(all.begin(), all.end(), 0);
  sequences.push_back(all);  // every token once
  for (int s = 0; s < 4; ++s) {
    std::vector<int> seq(6);
    for (auto& tok : seq) tok = pick(rng);
    sequences.push_back(std::move(seq));
  }

  for (const auto& seq : sequences) {
    const Matrix y = embed_vocab(emb, seq);
    for (int pos = 0; pos < static_cast<int>(seq.size()); ++pos) {
      for (int alpha = 1; alpha <= bundle.width(); ++alpha) {
        const double expected =
            witness_target_entry(bundle.a, bundle.attn_dim, seq[pos] + 1, alpha);
        if (y(alpha - 1, pos) != expected) {
          return fail("vocab pattern mismatch at token " +
                      std::to_string(seq[pos] + 1) + ", coordinate " +
                      std::to_string(alpha));
        }
      }
    }
  }
  return {};
}

VerifyResult verify_conv_bundle(const AssignmentBundle& bundle, std::uint64_t seed) {
  const ConvEmbedding emb{bundle.conv_kernel, Matrix{}};
  const int vocab_size = static_cast<int>(bundle.token_patches.size());
  const int k = emb.kernel_width();
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, vocab_size - 1);

  std::vector<std::vector<int>> sequences;
  std::vector<int> all(vocab_size);
  std::iota(all.begin(), all.end(), 0);
  sequences.push_back(all);
  for (int s = 0; s < 4; ++s) {
    std::vector<int> seq(5);
    for (auto& tok : seq) tok = pick(rng);
    sequences.push_back(std::move(seq));
  }

  for (const auto& seq : sequences) {
    std::vector<Vector> raw;
    raw.reserve(seq.size() * static_cast<std::size_t>(k));
    for (int tok : seq) {
      for (int l = 0; l < k; ++l) raw.push_back(bundle.token_patches[tok][l]);
    }
    const Matrix y = embed_conv(emb, raw);
    for (int pos = 0; pos < static_cast<int>(seq.size()); ++pos) {
      for (int alpha = 1; alpha <= bundle.width(); ++alpha) {
        const double expected =
            witness_target_entry(bundle.a, bundle.attn_dim, seq[pos] + 1, alpha);
        if (y(alpha - 1, pos) != expected) {
          return fail("conv pattern mismatch at token " +
                      std::to_string(seq[pos] + 1) + ", coordinate " +
                      std::to_string(alpha));
        }
      }
    }
  }
  return {};
}

VerifyResult verify_largeN_bundle(const AssignmentBundle& bundle, std::uint64_t seed) {
  const int width = bundle.width();
  const int da = bundle.attn_dim;
  Rng rng(seed);

  // Random value/output weights per head; key/query come from the bundle.
  LayerWeights layer;
  layer.heads.resize(bundle.heads);
  Matrix value_sum = Matrix::Zero(width, width);
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  for (auto& head : layer.heads) {
    head.key = bundle.first_key_query;
    head.query = bundle.first_key_query;
    head.value = gaussian_matrix(da, width, rng, scale);
    head.output = gaussian_matrix(width, da, rng, scale);
    value_sum += head.output * head.value;
  }

  const VocabEmbedding emb{bundle.vocab_matrix, Matrix{},
                           static_cast<int>(bundle.vocab_matrix.cols())};
  const Partition part = Partition::alternating(bundle.seq_len);

  std::uniform_int_distribution<int> pick(1, bundle.a.rows());
  std::vector<std::pair<int, int>> pairs = {{1, 1}, {1, bundle.a.rows()},
                                            {bundle.a.rows(), 1}};
  for (int s = 0; s < 3; ++s) pairs.emplace_back(pick(rng), pick(rng));

  for (const auto& [j1, j2] : pairs) {
    std::vector<int> tokens(bundle.seq_len, 0);
    for (std::size_t t = 0; t < part.p.size(); ++t) {
      tokens[part.p[t]] = bundle.pi_p[j1 - 1][t];
      tokens[part.q[t]] = bundle.pi_q[j2 - 1][t];
    }
    const Matrix y1 = layer_forward(layer, embed_vocab(emb, tokens));

    Vector u(width);
    for (int alpha = 1; alpha <= width; ++alpha) {
      u(alpha - 1) = summed_target_entry(bundle.a, da, j1, j2,
                                         static_cast<double>(bundle.seq_len), alpha);
    }
    const Vector expected = value_sum * u;
    for (int pos = 0; pos < bundle.seq_len; ++pos) {
      const double err = (y1.col(pos) - expected).cwiseAbs().maxCoeff();
      const double denom = std::max(1.0, expected.cwiseAbs().maxCoeff());
      if (err / denom > 1e-9) {
        return fail("first-layer output deviates from the summed pattern at pair (" +
                    std::to_string(j1) + ", " + std::to_string(j2) + "), position " +
                    std::to_string(pos + 1));
      }
    }
  }
  return {};
}

}  // namespace

VerifyResult verify_witness(const AssignmentBundle& bundle, std::uint64_t seed) {
  switch (bundle.kind) {
    case AssignmentBundle::Kind::vocab:
      return verify_vocab_bundle(bundle, seed);
    case AssignmentBundle::Kind::conv:
      return verify_conv_bundle(bundle, seed);
    case AssignmentBundle::Kind::large_n:
      return verify_largeN_bundle(bundle, seed);
  }
  return {false, "unknown bundle kind"};
}

}  // namespace seprank
