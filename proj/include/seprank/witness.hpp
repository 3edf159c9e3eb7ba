#pragma once

#include "seprank/model.hpp"
#include "seprank/septensor.hpp"

#include <optional>
#include <vector>

namespace seprank {

/// Non-negative integer matrix whose rows all share the same squared
/// Euclidean norm; the base object of the Hadamard-power rank argument.
struct WitnessMatrix {
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> entries;
  long long row_norm_sq = 0;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
};

/// Validates non-negativity and the constant-row-norm invariant.
WitnessMatrix make_witness_matrix(
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> entries);

/// Coordinate relabeling that skips every attn_dim-th slot (the ones slots):
/// phi(j) = floor((j-1)/attn_dim) * (attn_dim-1) + ((j-1) mod attn_dim) + 1.
/// 1-based in and out; injective away from the skipped slots.
int phi_index(int j, int attn_dim);

/// True iff (A A^T) to the entrywise power `hadamard_power` has full rank
/// ((d over power)) where d = A.cols(). Requires A to have ((d over power))
/// rows.
bool verify_hadamard_rank(const WitnessMatrix& a, int hadamard_power,
                          const RankTolerance& tol = {});

/// Seeded random search over equal-norm small-integer rows. Returns the
/// first verified matrix, or nothing after max_trials (a search limitation,
/// not a refutation). Deterministic in the seed.
std::optional<WitnessMatrix> search_hadamard_witness(int dim, int hadamard_power,
                                                     std::uint64_t seed,
                                                     int max_trials = 10000);

/// Explicit embedding weights and template inputs realizing one of the
/// lower-bound constructions, plus everything a verifier needs to replay it.
struct AssignmentBundle {
  enum class Kind { vocab, conv, large_n };
  Kind kind = Kind::vocab;

  WitnessMatrix a;
  int attn_dim = 0;
  int heads = 1;
  int rank_budget = 0;  // the r the construction must stay under
  int block_cols = 0;   // d: columns of A carried per half-block
  int power = 1;        // 3^(L-2) in the depth-parameterized cases

  Matrix vocab_matrix;           // width x vocab_size (vocab and large_n)
  std::vector<Matrix> conv_kernel;  // conv only
  Matrix positional;             // always all-zero here

  std::vector<int> template_tokens;              // 0-based ids
  std::vector<std::vector<Vector>> token_patches;  // conv: token -> k vectors

  // large_n extras: shared first-layer key/query selector and the repetition
  // maps (token tables over each partition side).
  Matrix first_key_query;  // attn_dim x width
  int seq_len = 0;
  std::vector<std::vector<int>> pi_p, pi_q;  // [A.rows()][seq_len/2], 0-based tokens

  int width() const;
};

/// Embedding-layer assignment for the vocabulary case. Requires odd
/// attn_dim >= 3 and rank_budget - heads == 2 * A.cols(); depth sets the
/// Hadamard power 3^(depth-2).
AssignmentBundle build_vocab_witness(const WitnessMatrix& a, int width,
                                     int attn_dim, int heads, int rank_budget,
                                     int depth);

/// Kernel assignment for the conv case; kernel_width * input_dim must cover
/// every output coordinate.
AssignmentBundle build_conv_witness(const WitnessMatrix& a, int width,
                                    int attn_dim, int heads, int rank_budget,
                                    int input_dim, int kernel_width);

/// First-layer summation assignment for the large-sequence case. Requires
/// attn_dim == 2 * A.cols() + 1, rank_budget == 2 * A.cols() + 1 + heads,
/// and seq_len >= max_entry(A) * (rank_budget - 1 - heads).
AssignmentBundle build_largeN_witness(const WitnessMatrix& a, int width,
                                      int attn_dim, int heads, int rank_budget,
                                      int seq_len);

/// The case-defined embedding entry the constructions must reproduce:
/// token 1-based, coordinate 1-based.
double witness_target_entry(const WitnessMatrix& a, int attn_dim, int token,
                            int coordinate);

/// Target of the summed first-layer input in the large-sequence case; the
/// ones slots carry ones_value (= seq_len after summation).
double summed_target_entry(const WitnessMatrix& a, int attn_dim, int j1, int j2,
                           double ones_value, int coordinate);

struct VerifyResult {
  bool pass = true;
  std::string detail;
};

/// Replays the construction and checks the produced embeddings (or summed
/// first-layer output) against the case-defined pattern. Exact equality for
/// the integer constructions; 1e-9 relative for the first-layer output.
VerifyResult verify_witness(const AssignmentBundle& bundle, std::uint64_t seed);

}  // namespace seprank
