#include "seprank/model.hpp"

#include <cmath>
#include <string>

namespace seprank {

namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + ": non-finite entry");
  }
}

Matrix positional_column_block(const Matrix& positional, int width, int n) {
  if (positional.size() == 0) {
    return Matrix::Zero(width, n);
  }
  if (positional.rows() != width) {
    throw InputError("positional matrix height does not match embedding width");
  }
  if (positional.cols() < n) {
    throw InputError("positional matrix has " + std::to_string(positional.cols()) +
                     " columns, sequence needs " + std::to_string(n));
  }
  return positional.leftCols(n);
}

}  // namespace

VocabEmbedding make_vocab_embedding(Matrix vocab_matrix, Matrix positional,
                                    const RankTolerance& tol) {
  check_finite(vocab_matrix, "vocab matrix");
  if (positional.size() != 0) check_finite(positional, "positional matrix");
  VocabEmbedding e{std::move(vocab_matrix), std::move(positional), 0};
  e.declared_rank = numerical_rank(e.vocab_matrix, tol);
  return e;
}

VocabEmbedding low_rank_factor(int width, int vocab_size, int rank,
                               std::uint64_t seed) {
  if (rank < 1 || rank > std::min(width, vocab_size)) {
    throw InputError("low_rank_factor: rank must lie in [1, min(width, vocab_size)]");
  }
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  const Matrix u = gaussian_matrix(width, rank, rng, scale);
  const Matrix w = gaussian_matrix(rank, vocab_size, rng, scale);
  VocabEmbedding e{u * w, Matrix{}, rank};
  return e;
}

Matrix ConvEmbedding::reshaped_kernel() const {
  const int w = width();
  const int di = input_dim();
  Matrix reshaped(w, effective_vocab_dim());
  for (int l = 0; l < kernel_width(); ++l) {
    reshaped.middleCols(static_cast<Eigen::Index>(l) * di, di) = kernel[l];
  }
  return reshaped;
}

int embedding_rank(const Embedding& e, const RankTolerance& tol) {
  if (const auto* v = std::get_if<VocabEmbedding>(&e)) {
    return numerical_rank(v->vocab_matrix, tol);
  }
  const auto& c = std::get<ConvEmbedding>(e);
  return numerical_rank(c.reshaped_kernel(), tol);
}

Matrix positional_dense(int width, int seq_len, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(width, seq_len, rng, 1.0 / std::sqrt(width));
}

Matrix positional_low_rank(int width, int seq_len, int rank, std::uint64_t seed) {
  if (rank < 1 || rank > std::min(width, seq_len)) {
    throw InputError("positional_low_rank: rank must lie in [1, min(width, seq_len)]");
  }
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  return gaussian_matrix(width, rank, rng, scale) *
         gaussian_matrix(rank, seq_len, rng, scale);
}

Matrix embed_vocab(const VocabEmbedding& e, const std::vector<int>& tokens) {
  const int n = static_cast<int>(tokens.size());
  Matrix out = positional_column_block(e.positional, e.width(), n);
  for (int i = 0; i < n; ++i) {
    if (tokens[i] < 0 || tokens[i] >= e.vocab_size()) {
      throw InputError("embed_vocab: token " + std::to_string(tokens[i]) +
                       " out of range [0, " + std::to_string(e.vocab_size()) + ")");
    }
    out.col(i) += e.vocab_matrix.col(tokens[i]);
  }
  return out;
}

Matrix embed_conv(const ConvEmbedding& e, const std::vector<Vector>& raw) {
  const int k = e.kernel_width();
  if (k == 0) {
    throw InputError("embed_conv: empty kernel");
  }
  if (raw.empty() || raw.size() % static_cast<std::size_t>(k) != 0) {
    throw InputError("embed_conv: raw length must be a positive multiple of the kernel width");
  }
  const int n = static_cast<int>(raw.size()) / k;
  Matrix out = positional_column_block(e.positional, e.width(), n);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < k; ++l) {
      const Vector& x = raw[static_cast<std::size_t>(i) * k + l];
      if (x.size() != e.input_dim()) {
        throw InputError("embed_conv: raw vector dimension mismatch");
      }
      if (!x.allFinite()) {
        throw InputError("embed_conv: non-finite raw input");
      }
      out.col(i) += e.kernel[l] * x;
    }
  }
  return out;
}

int NetworkSpec::heads() const {
  return layers.empty() ? 0 : static_cast<int>(layers[0].heads.size());
}

int NetworkSpec::width() const {
  if (const auto* v = std::get_if<VocabEmbedding>(&embedding)) return v->width();
  return std::get<ConvEmbedding>(embedding).width();
}

int NetworkSpec::attn_dim() const {
  if (layers.empty() || layers[0].heads.empty()) return 0;
  return static_cast<int>(layers[0].heads[0].key.rows());
}

std::uint64_t network_hash(const NetworkSpec& n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  if (const auto* v = std::get_if<VocabEmbedding>(&n.embedding)) {
    h = hash_matrix(h, v->vocab_matrix);
    h = hash_matrix(h, v->positional);
  } else {
    const auto& c = std::get<ConvEmbedding>(n.embedding);
    for (const auto& slice : c.kernel) h = hash_matrix(h, slice);
    h = hash_matrix(h, c.positional);
  }
  for (const auto& layer : n.layers) {
    for (const auto& head : layer.heads) {
      h = hash_matrix(h, head.key);
      h = hash_matrix(h, head.query);
      h = hash_matrix(h, head.value);
      h = hash_matrix(h, head.output);
    }
  }
  return h;
}

namespace {

std::vector<LayerWeights> random_layers(const NetworkShape& shape, Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(shape.width));
  std::vector<LayerWeights> layers(shape.depth);
  for (auto& layer : layers) {
    layer.heads.resize(shape.heads);
    for (auto& head : layer.heads) {
      head.key = gaussian_matrix(shape.attn_dim, shape.width, rng, scale);
      head.query = gaussian_matrix(shape.attn_dim, shape.width, rng, scale);
      head.value = gaussian_matrix(shape.attn_dim, shape.width, rng, scale);
      head.output = gaussian_matrix(shape.width, shape.attn_dim, rng, scale);
    }
  }
  return layers;
}

void check_shape(const NetworkShape& shape) {
  if (shape.depth < 1 || shape.heads < 1 || shape.width < 1 ||
      shape.attn_dim < 1 || shape.vocab_size < 1) {
    throw InputError("network shape fields must be positive");
  }
}

}  // namespace

NetworkSpec random_vocab_network(const NetworkShape& shape, std::uint64_t seed) {
  check_shape(shape);
  Rng rng(seed);
  VocabEmbedding emb;
  if (shape.embedding_rank > 0) {
    emb = low_rank_factor(shape.width, shape.vocab_size, shape.embedding_rank, rng());
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(shape.width));
    emb.vocab_matrix = gaussian_matrix(shape.width, shape.vocab_size, rng, scale);
    emb.declared_rank = std::min(shape.width, shape.vocab_size);
  }
  if (shape.seq_len > 0) {
    emb.positional = positional_dense(shape.width, shape.seq_len, rng());
  }
  NetworkSpec n{std::move(emb), random_layers(shape, rng)};
  return n;
}

NetworkSpec random_conv_network(const NetworkShape& shape, int input_dim,
                                std::uint64_t seed) {
  check_shape(shape);
  if (input_dim < 1) {
    throw InputError("random_conv_network: input_dim must be positive");
  }
  Rng rng(seed);
  ConvEmbedding emb;
  emb.kernel.push_back(
      gaussian_matrix(shape.width, input_dim, rng, 1.0 / std::sqrt(shape.width)));
  if (shape.seq_len > 0) {
    emb.positional = positional_dense(shape.width, shape.seq_len, rng());
  }
  NetworkSpec n{std::move(emb), random_layers(shape, rng)};
  return n;
}

Matrix layer_forward(const LayerWeights& w, const Matrix& ys) {
  if (w.heads.empty()) {
    throw InputError("layer_forward: layer has no heads");
  }
  const Eigen::Index width = ys.rows();
  Matrix out = Matrix::Zero(width, ys.cols());
  for (const auto& head : w.heads) {
    if (head.key.cols() != width || head.query.cols() != width ||
        head.value.cols() != width || head.output.rows() != width) {
      throw InputError("layer_forward: weight shapes do not match sequence width");
    }
    const Matrix q = head.query * ys;  // attn_dim x N
    const Matrix k = head.key * ys;
    const Matrix v = head.value * ys;
    // scores(i, j) = <q_i, k_j>; out column i accumulates V * scores.row(i)^T.
    out.noalias() += head.output * (v * (k.transpose() * q));
  }
  return out;
}

Matrix forward_embedded(const NetworkSpec& n, Matrix ys) {
  for (const auto& layer : n.layers) {
    ys = layer_forward(layer, ys);
  }
  return ys;
}

Matrix network_forward(const NetworkSpec& n, const std::vector<int>& tokens) {
  const auto* v = std::get_if<VocabEmbedding>(&n.embedding);
  if (v == nullptr) {
    throw InputError("network_forward: network has a conv embedding, got tokens");
  }
  return forward_embedded(n, embed_vocab(*v, tokens));
}

Matrix network_forward(const NetworkSpec& n, const std::vector<Vector>& raw) {
  const auto* c = std::get_if<ConvEmbedding>(&n.embedding);
  if (c == nullptr) {
    throw InputError("network_forward: network has a vocab embedding, got raw vectors");
  }
  return forward_embedded(n, embed_conv(*c, raw));
}

ExplicitForm explicit_form(const NetworkSpec& n) {
  const int depth = n.depth();
  if (depth < 1) {
    throw InputError("explicit_form: network must have at least one layer");
  }
  if (depth > 2) {
    throw CapabilityError(
        "explicit_form: supported for depth <= 2 only (term count grows as "
        "N^C * H^C * d_a^(C+1) with C = (3^L-1)/2)");
  }
  ExplicitForm f;
  f.depth = depth;
  f.comp_count = composition_count(depth).convert_to<int>();
  f.heads = n.heads();
  f.attn_dim = n.attn_dim();

  if (depth == 1) {
    for (const auto& head : n.layers[0].heads) {
      ExplicitForm::HeadTuple t;
      t.a = {head.value, head.query};
      t.b = {head.output.transpose(), head.key};
      f.tuples.push_back(std::move(t));
    }
    return f;
  }

  // Depth 2: expand the outer layer's query/key/value arguments through the
  // inner layer. One tuple per (outer head h, inner heads g1, g2, g3), where
  // g1 feeds the query branch, g2 the key branch, and g3 the value branch.
  const auto& inner = n.layers[0].heads;
  const auto& outer = n.layers[1].heads;
  for (const auto& h : outer) {
    for (const auto& g1 : inner) {
      for (const auto& g2 : inner) {
        for (const auto& g3 : inner) {
          ExplicitForm::HeadTuple t;
          t.a.resize(5);
          t.b.resize(5);
          t.b[0] = h.output.transpose();
          t.a[0] = h.value * g3.output * g3.value;
          t.b[1] = g3.key;
          t.a[1] = g3.query;
          t.b[2] = g2.query;
          t.a[2] = g2.key;
          t.b[3] = h.key * g2.output * g2.value;
          t.a[3] = h.query * g1.output * g1.value;
          t.b[4] = g1.key;
          t.a[4] = g1.query;
          f.tuples.push_back(std::move(t));
        }
      }
    }
  }
  return f;
}

double explicit_form_eval(const ExplicitForm& f, const Matrix& embedded,
                          int position, int coordinate) {
  const int n = static_cast<int>(embedded.cols());
  const int c_count = f.comp_count;
  const int da = f.attn_dim;
  if (position < 0 || position >= n) {
    throw InputError("explicit_form_eval: position out of range");
  }
  if (coordinate < 0 || coordinate >= embedded.rows()) {
    throw InputError("explicit_form_eval: coordinate out of range");
  }

  double total = 0.0;
  std::vector<int> j(c_count, 0);   // position assignment, j[c] in [0, n)
  std::vector<int> r(c_count + 1, 0);  // attn-dim chain, r[c] in [0, da)
  for (const auto& tuple : f.tuples) {
    // dots_a[c] = A_(c+1) * Y, so dots_a[c](r, j) = <A_(c+1)[r], y_j>.
    // b[0] is the bare coefficient matrix; it is indexed, not dotted.
    std::vector<Matrix> dots_a(c_count + 1), dots_b(c_count + 1);
    for (int c = 0; c <= c_count; ++c) {
      dots_a[c] = tuple.a[c] * embedded;
      if (c > 0) dots_b[c] = tuple.b[c] * embedded;
    }
    std::fill(j.begin(), j.end(), 0);
    while (true) {
      std::fill(r.begin(), r.end(), 0);
      while (true) {
        double term = tuple.b[0](r[0], coordinate);
        for (int c = 0; c < c_count; ++c) {
          term *= dots_a[c](r[c], j[c]);
          term *= dots_b[c + 1](r[c + 1], j[c]);
        }
        term *= dots_a[c_count](r[c_count], position);
        total += term;

        int idx = c_count;
        while (idx >= 0 && ++r[idx] == da) {
          r[idx] = 0;
          --idx;
        }
        if (idx < 0) break;
      }
      int idx = c_count - 1;
      while (idx >= 0 && ++j[idx] == n) {
        j[idx] = 0;
        --idx;
      }
      if (idx < 0) break;
    }
  }
  return total;
}

}  // namespace seprank
