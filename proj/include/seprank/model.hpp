#pragma once

#include "seprank/common.hpp"
#include "seprank/numerics.hpp"

#include <variant>
#include <vector>

namespace seprank {

// Sequences are width x N matrices, one column per position.

/// Token-lookup embedding: column w of vocab_matrix plus the positional
/// column for the slot. An empty positional matrix means all-zero
/// positional embedding for any sequence length.
struct VocabEmbedding {
  Matrix vocab_matrix;  // width x vocab_size
  Matrix positional;    // width x seq_len, or empty
  int declared_rank = 0;

  int width() const { return static_cast<int>(vocab_matrix.rows()); }
  int vocab_size() const { return static_cast<int>(vocab_matrix.cols()); }
};

/// Builds a VocabEmbedding and records its measured rank.
VocabEmbedding make_vocab_embedding(Matrix vocab_matrix, Matrix positional = {},
                                    const RankTolerance& tol = {});

/// Rank-r factored vocabulary matrix U * W with Gaussian factors scaled by
/// 1/sqrt(r). Requires 1 <= r <= min(width, vocab_size).
VocabEmbedding low_rank_factor(int width, int vocab_size, int rank,
                               std::uint64_t seed);

/// Strided linear patch embedding. kernel[l] maps the l-th raw vector of a
/// patch; a patch is kernel_width consecutive raw inputs.
struct ConvEmbedding {
  std::vector<Matrix> kernel;  // kernel_width slices, each width x input_dim
  Matrix positional;           // width x seq_len, or empty

  int width() const { return kernel.empty() ? 0 : static_cast<int>(kernel[0].rows()); }
  int kernel_width() const { return static_cast<int>(kernel.size()); }
  int input_dim() const { return kernel.empty() ? 0 : static_cast<int>(kernel[0].cols()); }
  int effective_vocab_dim() const { return kernel_width() * input_dim(); }

  /// Slices concatenated side by side: width x (kernel_width * input_dim).
  Matrix reshaped_kernel() const;
};

using Embedding = std::variant<VocabEmbedding, ConvEmbedding>;

/// Rank of the vocabulary matrix, or of the reshaped kernel in the conv
/// case. Bounded by min(width, effective vocab dimension).
int embedding_rank(const Embedding& e, const RankTolerance& tol = {});

/// Dense Gaussian positional matrix, or a rank-r factored one.
Matrix positional_dense(int width, int seq_len, std::uint64_t seed);
Matrix positional_low_rank(int width, int seq_len, int rank, std::uint64_t seed);

/// tokens are 0-based ids in [0, vocab_size).
Matrix embed_vocab(const VocabEmbedding& e, const std::vector<int>& tokens);

/// raw holds seq_len * kernel_width input vectors.
Matrix embed_conv(const ConvEmbedding& e, const std::vector<Vector>& raw);

struct HeadWeights {
  Matrix key, query, value;  // attn_dim x width
  Matrix output;             // width x attn_dim
};

struct LayerWeights {
  std::vector<HeadWeights> heads;
};

struct NetworkSpec {
  Embedding embedding;
  std::vector<LayerWeights> layers;

  int depth() const { return static_cast<int>(layers.size()); }
  int heads() const;
  int width() const;
  int attn_dim() const;
};

std::uint64_t network_hash(const NetworkSpec& n);

struct NetworkShape {
  int depth = 1;
  int heads = 1;
  int width = 1;
  int attn_dim = 1;
  int vocab_size = 2;
  int embedding_rank = 0;  // 0 = dense full-rank init
  int seq_len = 0;         // 0 = zero positional embedding
};

/// Random network with i.i.d. Gaussian weights scaled by 1/sqrt(width) and a
/// vocabulary embedding per the shape. Deterministic in the seed.
NetworkSpec random_vocab_network(const NetworkShape& shape, std::uint64_t seed);

/// Same attention stack over a single-slice Gaussian conv embedding.
NetworkSpec random_conv_network(const NetworkShape& shape, int input_dim,
                                std::uint64_t seed);

/// One unnormalized self-attention layer:
///   out_i = sum_h O_h * sum_j <Q_h y_i, K_h y_j> * V_h y_j
/// No softmax, feed-forward, residual, or normalization.
Matrix layer_forward(const LayerWeights& w, const Matrix& ys);

/// All depth() layers applied to an already-embedded sequence.
Matrix forward_embedded(const NetworkSpec& n, Matrix ys);

Matrix network_forward(const NetworkSpec& n, const std::vector<int>& tokens);
Matrix network_forward(const NetworkSpec& n, const std::vector<Vector>& raw);

/// The flattened polynomial form of the attention stack: the depth-L output
/// coordinate equals a sum over composition_count(L) position indices, a
/// head assignment per index, and an attention-dim index chain, of
///   B0[r1,p] * prod_c <A_c[r_c], y_{j_c}> * prod_c <B_c[r_{c+1}], y_{j_c}>
/// with the final position pinned to the queried one.
struct ExplicitForm {
  int depth = 0;
  int comp_count = 0;  // composition_count(depth) as a plain int
  int heads = 1;
  int attn_dim = 1;

  struct HeadTuple {
    std::vector<Matrix> a;  // comp_count + 1 matrices, attn_dim x width
    std::vector<Matrix> b;  // comp_count + 1 matrices; b[0] pairs with r_1
  };
  std::vector<HeadTuple> tuples;  // heads^comp_count entries
};

/// Exact flattened form of the network's attention stack. Supported for
/// depth <= 2; deeper forms have infeasible term counts.
ExplicitForm explicit_form(const NetworkSpec& n);

/// Brute-force evaluation of the flattened sum at one output coordinate.
/// position and coordinate are 0-based.
double explicit_form_eval(const ExplicitForm& f, const Matrix& embedded,
                          int position, int coordinate);

}  // namespace seprank
