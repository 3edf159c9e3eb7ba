#pragma once

#include "seprank/bounds.hpp"
#include "seprank/model.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace seprank {

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

/// Fixed inputs whose combinations span the evaluation grid: token ids for
/// vocabulary embeddings, one patch vector per slot for conv embeddings.
struct TemplateSet {
  std::vector<int> tokens;      // 0-based ids; empty in the conv case
  std::vector<Vector> patches;  // empty in the vocab case

  bool is_vocab() const { return !tokens.empty(); }
  int size() const {
    return static_cast<int>(is_vocab() ? tokens.size() : patches.size());
  }

  static TemplateSet first_tokens(int count);
  static TemplateSet gaussian_patches(int count, int input_dim, std::uint64_t seed);

  /// At least two templates, pairwise distinct.
  void validate() const;
};

/// Balanced split of the position indices (patch indices in the conv case,
/// so a patch is never divided between the two sides).
struct Partition {
  std::vector<int> p, q;  // 0-based, sorted

  static Partition alternating(int n);  // even positions vs odd positions
  static Partition contiguous(int n);   // first half vs second half
  void validate(int n) const;
};

/// All values of one output coordinate over the full template grid,
/// flattened with the first position index slowest.
struct GridTensor {
  int order = 0;     // number of positions N
  int mode_dim = 0;  // number of templates Z
  std::vector<double> entries;  // mode_dim^order values

  // Provenance of network-built grids.
  int position = 0;
  int coordinate = 0;
  std::uint64_t source_hash = 0;
  TemplateSet templates;

  std::size_t flat_index(const std::vector<int>& idx) const;
  double at(const std::vector<int>& idx) const { return entries[flat_index(idx)]; }
};

/// Maps one grid index (template choice per position) to a value.
using GridFunctional = std::function<double(const std::vector<int>&)>;

/// Exhaustive evaluation over all mode_dim^order grid points. Throws
/// CapabilityError when the grid exceeds cap. threads > 1 splits the flat
/// index range; assembly is index-deterministic, so results are
/// bit-identical to the sequential run.
GridTensor build_grid_tensor(const GridFunctional& f, int order, int mode_dim,
                             std::size_t cap = kDefaultGridCap, int threads = 1);

GridTensor build_grid_tensor(const NetworkSpec& n, const TemplateSet& t,
                             int seq_len, int position, int coordinate,
                             std::size_t cap = kDefaultGridCap, int threads = 1);

/// Entry (d_1..d_N) lands at row sum_t d_{p_t} * Z^(N/2-1-t) and the
/// analogous column over q (0-based form of the balanced-partition
/// unfolding). The map grid index -> (row, col) is a bijection.
Matrix matricize(const GridTensor& g, const Partition& part);

/// Rank-preserving row/column rescaling. Deep compositions produce grid
/// entries spanning ~degree orders of magnitude, which makes a relative
/// singular-value cutoff truncate true rank; dividing rows and columns by
/// their max magnitudes removes the spread without touching the rank.
Matrix equilibrate_scale(Matrix m, int passes = 2);

/// Rank of the matricized grid tensor: a certified lower bound (up to the
/// rank tolerance) on the separation rank w.r.t. the partition.
int empirical_sep_lower_bound(const NetworkSpec& n, const TemplateSet& t,
                              const Partition& part, int position, int coordinate,
                              const RankTolerance& tol = kGridRankTolerance,
                              std::size_t cap = kDefaultGridCap, int threads = 1);

/// Rank of a seeded random submatrix of the matricization, built without
/// the full grid: rows (columns) are sampled assignments of templates to
/// the P-side (Q-side) positions. A submatrix rank is still a valid lower
/// bound; this is the explicit opt-in for grids past the cap. With
/// sample_side >= Z^(N/2) it degenerates to the full matricization.
int sampled_sep_lower_bound(const NetworkSpec& n, const TemplateSet& t,
                            const Partition& part, int position, int coordinate,
                            int sample_side, std::uint64_t seed,
                            const RankTolerance& tol = kGridRankTolerance,
                            std::size_t cap = kDefaultGridCap);

struct SweepSpec {
  std::string param;        // one of "r", "L", "dx", "Z"
  std::vector<int> values;  // swept values
  std::vector<std::uint64_t> seeds;

  // Fixed configuration; the swept field is overridden per value.
  int depth = 2;
  int width = 4;
  int embedding_rank = 2;
  int heads = 1;
  int attn_dim = 2;
  int seq_len = 4;
  int mode_dim = 4;
  int vocab_size = 0;  // 0 = max(mode_dim, embedding_rank)
  int position = 0;
  int coordinate = 0;
  RankTolerance tol = kGridRankTolerance;
  std::size_t cap = kDefaultGridCap;
  int threads = 1;
};

struct SweepRow {
  std::string swept_param;
  int value = 0;
  std::uint64_t seed = 0;
  int depth, width, rank, heads, attn_dim, seq_len, mode_dim;
  int empirical_rank = 0;
  double log_upper_bound = 0.0;
  double log_lower_bound = 0.0;
};

/// One row per (value, seed), in order. Networks use zero positional
/// embedding, the first-Z-tokens template set, and the alternating
/// partition. Every point is checked against the grid cap up front.
std::vector<SweepRow> rank_sweep(const SweepSpec& spec);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace seprank
