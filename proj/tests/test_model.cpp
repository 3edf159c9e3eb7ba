#include "doctest.h"

#include "seprank/model.hpp"

#include <cmath>

using namespace seprank;

namespace {

double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / denom;
}

Matrix ones_matrix(int r, int c) { return Matrix::Ones(r, c); }

NetworkSpec scalar_all_ones_network() {
  VocabEmbedding emb{Matrix::Identity(1, 1), Matrix{}, 1};
  LayerWeights layer;
  layer.heads.push_back({ones_matrix(1, 1), ones_matrix(1, 1),
                         ones_matrix(1, 1), ones_matrix(1, 1)});
  return NetworkSpec{emb, {layer}};
}

}  // namespace

TEST_CASE("embed_vocab selects columns and adds positionals") {
  VocabEmbedding eye{Matrix::Identity(2, 2), Matrix{}, 2};
  const Matrix out = embed_vocab(eye, {0, 1});
  CHECK(out == Matrix::Identity(2, 2));

  Matrix mv(2, 2);
  mv << 1, 3, 2, 4;
  Matrix pos(2, 1);
  pos << 10, 10;
  VocabEmbedding e{mv, pos, 2};
  const Matrix y = embed_vocab(e, {0});
  CHECK(y(0, 0) == 11.0);
  CHECK(y(1, 0) == 12.0);

  VocabEmbedding zero{Matrix::Zero(3, 4), Matrix{}, 0};
  CHECK(embed_vocab(zero, {0, 3, 2}) == Matrix::Zero(3, 3));

  CHECK_THROWS_AS(embed_vocab(eye, {2}), InputError);
  CHECK_THROWS_AS(embed_vocab(eye, {-1}), InputError);
}

TEST_CASE("embed_conv sums kernel slices over each patch") {
  ConvEmbedding identity1{{Matrix::Identity(2, 2)}, Matrix{}};
  std::vector<Vector> xs = {Vector::Ones(2), 2.0 * Vector::Ones(2)};
  const Matrix out = embed_conv(identity1, xs);
  CHECK(out.col(0) == xs[0]);
  CHECK(out.col(1) == xs[1]);

  ConvEmbedding identity2{{Matrix::Identity(2, 2), Matrix::Identity(2, 2)}, Matrix{}};
  Vector e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  const Matrix patch_sum = embed_conv(identity2, {e1, e2});
  CHECK(patch_sum.col(0) == Vector::Ones(2));

  Matrix pos(2, 2);
  pos << 5, 6, 7, 8;
  ConvEmbedding zero_kernel{{Matrix::Zero(2, 3)}, pos};
  const Matrix only_pos = embed_conv(zero_kernel, {Vector::Ones(3), Vector::Ones(3)});
  CHECK(only_pos == pos);

  CHECK_THROWS_AS(embed_conv(identity2, {e1}), InputError);
  CHECK_THROWS_AS(embed_conv(identity1, {Vector::Ones(3)}), InputError);
}

TEST_CASE("conv embedding with kernel width 1 equals a vocab embedding") {
  Rng rng(7);
  const Matrix k = gaussian_matrix(3, 4, rng);
  ConvEmbedding conv{{k}, Matrix{}};
  VocabEmbedding vocab{k, Matrix{}, 0};
  for (int token = 0; token < 4; ++token) {
    Vector onehot = Vector::Zero(4);
    onehot(token) = 1.0;
    const Matrix via_conv = embed_conv(conv, {onehot});
    const Matrix via_vocab = embed_vocab(vocab, {token});
    CHECK(via_conv == via_vocab);
  }
}

TEST_CASE("embedding_rank") {
  CHECK(embedding_rank(VocabEmbedding{Matrix::Identity(4, 4), Matrix{}, 4}) == 4);

  SUBCASE("factored embeddings have the declared rank") {
    for (int r : {1, 4}) {
      const VocabEmbedding e = low_rank_factor(4, 8, r, 99);
      CHECK(e.declared_rank == r);
      CHECK(embedding_rank(e) == r);
    }
    // Desk check of the published 16/680 low-rank configuration.
    const VocabEmbedding wide = low_rank_factor(680, 2000, 16, 5);
    CHECK(embedding_rank(wide) == 16);
  }

  SUBCASE("rank-1 factors give parallel columns") {
    const VocabEmbedding e = low_rank_factor(4, 8, 1, 3);
    const Matrix& mv = e.vocab_matrix;
    for (int c = 1; c < mv.cols(); ++c) {
      Matrix two_cols(4, 2);
      two_cols << mv.col(0), mv.col(c);
      CHECK(numerical_rank(two_cols) == 1);
    }
  }

  SUBCASE("conv kernel with identical rank-1 slices") {
    Rng rng(11);
    const Matrix rank1 = gaussian_matrix(3, 1, rng) * gaussian_matrix(1, 2, rng);
    ConvEmbedding conv{{rank1, rank1}, Matrix{}};
    CHECK(embedding_rank(Embedding{conv}) == 1);
  }

  SUBCASE("declared rank holds across shapes") {
    for (int r = 1; r <= 4; ++r) {
      CHECK(embedding_rank(low_rank_factor(4, 8, r, 7 * r)) == r);
      CHECK(embedding_rank(low_rank_factor(6, 5, r, 7 * r + 1)) == r);
    }
  }

  CHECK_THROWS_AS(low_rank_factor(4, 8, 0, 0), InputError);
  CHECK_THROWS_AS(low_rank_factor(4, 8, 5, 0), InputError);
}

TEST_CASE("positional matrices") {
  const Matrix dense = positional_dense(4, 6, 9);
  CHECK(dense.rows() == 4);
  CHECK(dense.cols() == 6);
  CHECK(numerical_rank(dense) == 4);

  const Matrix factored = positional_low_rank(5, 8, 2, 9);
  CHECK(factored.rows() == 5);
  CHECK(factored.cols() == 8);
  CHECK(numerical_rank(factored) == 2);
  CHECK_THROWS_AS(positional_low_rank(5, 8, 6, 9), InputError);

  // A network with a positional term is no longer permutation equivariant
  // but still embeds column i as token column + positional column i.
  VocabEmbedding e{Matrix::Identity(3, 3), factored.topRows(3), 3};
  const Matrix y = embed_vocab(e, {2, 0});
  CHECK(y.col(0) == Matrix::Identity(3, 3).col(2) + factored.topRows(3).col(0));
  CHECK(y.col(1) == Matrix::Identity(3, 3).col(0) + factored.topRows(3).col(1));
}

TEST_CASE("layer_forward hand values") {
  LayerWeights w;
  w.heads.push_back({ones_matrix(1, 1), ones_matrix(1, 1), ones_matrix(1, 1),
                     ones_matrix(1, 1)});

  Matrix y(1, 1);
  y << 2.0;
  CHECK(layer_forward(w, y)(0, 0) == 8.0);  // <2,2> * 2

  CHECK(layer_forward(w, Matrix::Zero(1, 3)) == Matrix::Zero(1, 3));

  // out_i = sum_j (y_i * y_j) * y_j over y = (1, 2):
  // out_1 = 1*1*1 + 1*2*2 = 5, out_2 = 2*1*1 + 2*2*2 = 10.
  Matrix y2(1, 2);
  y2 << 1.0, 2.0;
  const Matrix out = layer_forward(w, y2);
  CHECK(out(0, 0) == 5.0);
  CHECK(out(0, 1) == 10.0);
}

TEST_CASE("layer is a homogeneous degree-3 map") {
  Rng rng(21);
  std::uniform_real_distribution<double> alpha_dist(0.5, 2.0);
  for (int trial = 0; trial < 8; ++trial) {
    NetworkShape shape{1, 2, 3, 2, 4, 0, 0};
    const NetworkSpec n = random_vocab_network(shape, 1000 + trial);
    const Matrix y = gaussian_matrix(3, 4, rng);
    const double alpha = alpha_dist(rng);
    const Matrix lhs = layer_forward(n.layers[0], alpha * y);
    const Matrix rhs = std::pow(alpha, 3) * layer_forward(n.layers[0], y);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
          1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("network output scales as alpha^(3^L) with zero positional") {
  const int input_dim = 3;
  for (int depth : {1, 2, 3}) {
    for (int trial = 0; trial < 3; ++trial) {
      NetworkShape shape{depth, 2, 3, 2, 4, 0, 0};
      const NetworkSpec n =
          random_conv_network(shape, input_dim, 50 * depth + trial);
      Rng rng(500 + trial);
      std::vector<Vector> xs;
      for (int i = 0; i < 3; ++i) xs.push_back(gaussian_matrix(input_dim, 1, rng));
      for (double alpha : {0.5, 1.3}) {
        std::vector<Vector> scaled;
        for (const auto& x : xs) scaled.push_back(alpha * x);
        const Matrix base = network_forward(n, xs);
        const Matrix lhs = network_forward(n, scaled);
        const Matrix rhs = std::pow(alpha, std::pow(3.0, depth)) * base;
        const double denom = std::max(1e-12, rhs.cwiseAbs().maxCoeff());
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() / denom <= 1e-9);
      }
    }
  }
}

TEST_CASE("depth-1 network is embed followed by one layer") {
  NetworkShape shape{1, 2, 3, 2, 5, 0, 0};
  const NetworkSpec n = random_vocab_network(shape, 4);
  const std::vector<int> tokens = {4, 1, 3};
  const auto& emb = std::get<VocabEmbedding>(n.embedding);
  CHECK(network_forward(n, tokens) ==
        layer_forward(n.layers[0], embed_vocab(emb, tokens)));
}

TEST_CASE("permutation equivariance with zero positional") {
  // Integer-valued weights keep double arithmetic exact, so the permuted
  // run matches bit for bit.
  Rng rng(31);
  std::uniform_int_distribution<int> small_int(-2, 2);
  NetworkShape shape{2, 2, 3, 2, 5, 0, 0};
  NetworkSpec n = random_vocab_network(shape, 1);
  auto integerize = [&](Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = static_cast<double>(small_int(rng));
  };
  auto& emb = std::get<VocabEmbedding>(n.embedding);
  integerize(emb.vocab_matrix);
  for (auto& layer : n.layers) {
    for (auto& head : layer.heads) {
      integerize(head.key);
      integerize(head.query);
      integerize(head.value);
      integerize(head.output);
    }
  }

  const std::vector<int> tokens = {1, 4, 0, 2};
  const std::vector<int> perm = {2, 0, 3, 1};
  std::vector<int> permuted_tokens(tokens.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    permuted_tokens[i] = tokens[perm[i]];
  }
  const Matrix base = network_forward(n, tokens);
  const Matrix permuted = network_forward(n, permuted_tokens);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    CHECK(permuted.col(i) == base.col(perm[i]));
  }
}

TEST_CASE("explicit form reproduces the one-layer network") {
  SUBCASE("scalar hand value") {
    const NetworkSpec n = scalar_all_ones_network();
    const ExplicitForm f = explicit_form(n);
    Matrix y(1, 1);
    y << 2.0;
    CHECK(explicit_form_eval(f, y, 0, 0) == doctest::Approx(8.0).epsilon(1e-12));
  }

  SUBCASE("zero A matrices give zero") {
    const NetworkSpec n = scalar_all_ones_network();
    ExplicitForm f = explicit_form(n);
    for (auto& tuple : f.tuples) {
      for (auto& a : tuple.a) a.setZero();
    }
    Matrix y(1, 1);
    y << 2.0;
    CHECK(explicit_form_eval(f, y, 0, 0) == 0.0);
  }

  SUBCASE("random networks, 20+ seeds") {
    for (std::uint64_t seed = 0; seed < 22; ++seed) {
      Rng dims(seed * 17 + 3);
      const int dx = 1 + static_cast<int>(dims() % 4);
      const int da = 1 + static_cast<int>(dims() % 3);
      const int h = 1 + static_cast<int>(dims() % 2);
      const int n_positions = 1 + static_cast<int>(dims() % 4);
      NetworkShape shape{1, h, dx, da, 4, 0, 0};
      const NetworkSpec n = random_vocab_network(shape, seed);
      const ExplicitForm f = explicit_form(n);
      Rng rng(900 + seed);
      const Matrix y = gaussian_matrix(dx, n_positions, rng);
      const Matrix expected = layer_forward(n.layers[0], y);
      for (int i = 0; i < n_positions; ++i) {
        for (int p = 0; p < dx; ++p) {
          CHECK(rel_err(explicit_form_eval(f, y, i, p), expected(p, i)) <= 1e-10);
        }
      }
    }
  }

  SUBCASE("spec example dims: dx=3 da=2 H=2 N=3 seed 7") {
    NetworkShape shape{1, 2, 3, 2, 4, 0, 0};
    const NetworkSpec n = random_vocab_network(shape, 7);
    const ExplicitForm f = explicit_form(n);
    Rng rng(7);
    const Matrix y = gaussian_matrix(3, 3, rng);
    const Matrix expected = layer_forward(n.layers[0], y);
    for (int i = 0; i < 3; ++i) {
      for (int p = 0; p < 3; ++p) {
        CHECK(rel_err(explicit_form_eval(f, y, i, p), expected(p, i)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("explicit form reproduces the two-layer network") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int dx = 2 + static_cast<int>(seed % 2);
    NetworkShape shape{2, 1 + static_cast<int>(seed % 2), dx, 2, 4, 0, 0};
    const NetworkSpec n = random_vocab_network(shape, seed);
    const ExplicitForm f = explicit_form(n);
    CHECK(f.comp_count == 4);
    Rng rng(40 + seed);
    const Matrix y = gaussian_matrix(dx, 2, rng);
    const Matrix expected = forward_embedded(n, y);
    for (int i = 0; i < 2; ++i) {
      for (int p = 0; p < dx; ++p) {
        CHECK(rel_err(explicit_form_eval(f, y, i, p), expected(p, i)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("explicit form depth cap") {
  NetworkShape shape{3, 1, 2, 2, 4, 0, 0};
  const NetworkSpec n = random_vocab_network(shape, 0);
  CHECK_THROWS_AS(explicit_form(n), CapabilityError);
}
