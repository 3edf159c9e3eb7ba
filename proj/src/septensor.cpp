#include "seprank/septensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

namespace seprank {

TemplateSet TemplateSet::first_tokens(int count) {
  TemplateSet t;
  t.tokens.resize(count);
  std::iota(t.tokens.begin(), t.tokens.end(), 0);
  return t;
}

TemplateSet TemplateSet::gaussian_patches(int count, int input_dim,
                                          std::uint64_t seed) {
  Rng rng(seed);
  TemplateSet t;
  t.patches.reserve(count);
  for (int i = 0; i < count; ++i) {
    t.patches.push_back(gaussian_matrix(input_dim, 1, rng));
  }
  return t;
}

void TemplateSet::validate() const {
  if (is_vocab() && !patches.empty()) {
    throw InputError("template set mixes tokens and patches");
  }
  if (size() < 2) {
    throw InputError("template set needs at least 2 templates");
  }
  if (is_vocab()) {
    std::set<int> seen(tokens.begin(), tokens.end());
    if (static_cast<int>(seen.size()) != size()) {
      throw InputError("template tokens must be pairwise distinct");
    }
  } else {
    for (std::size_t i = 0; i < patches.size(); ++i) {
      for (std::size_t j = i + 1; j < patches.size(); ++j) {
        if (patches[i].size() == patches[j].size() && patches[i] == patches[j]) {
          throw InputError("template patches must be pairwise distinct");
        }
      }
    }
  }
}

Partition Partition::alternating(int n) {
  Partition part;
  for (int i = 0; i < n; ++i) {
    (i % 2 == 0 ? part.p : part.q).push_back(i);
  }
  return part;
}

Partition Partition::contiguous(int n) {
  Partition part;
  for (int i = 0; i < n; ++i) {
    (i < n / 2 ? part.p : part.q).push_back(i);
  }
  return part;
}

void Partition::validate(int n) const {
  if (n % 2 != 0) {
    throw InputError("balanced partitions need an even number of positions, got " +
                     std::to_string(n));
  }
  if (static_cast<int>(p.size()) != n / 2 || static_cast<int>(q.size()) != n / 2) {
    throw InputError("partition sides must each hold half of the positions");
  }
  std::vector<bool> seen(n, false);
  for (const auto& side : {p, q}) {
    if (!std::is_sorted(side.begin(), side.end())) {
      throw InputError("partition sides must be sorted");
    }
    for (int idx : side) {
      if (idx < 0 || idx >= n || seen[idx]) {
        throw InputError("partition must cover each position exactly once");
      }
      seen[idx] = true;
    }
  }
}

std::size_t GridTensor::flat_index(const std::vector<int>& idx) const {
  if (static_cast<int>(idx.size()) != order) {
    throw InputError("grid index order mismatch");
  }
  std::size_t flat = 0;
  for (int d : idx) {
    if (d < 0 || d >= mode_dim) {
      throw InputError("grid index out of range");
    }
    flat = flat * static_cast<std::size_t>(mode_dim) + static_cast<std::size_t>(d);
  }
  return flat;
}

namespace {

std::size_t checked_grid_size(int order, int mode_dim, std::size_t cap) {
  if (order < 1 || mode_dim < 1) {
    throw InputError("grid needs order >= 1 and mode_dim >= 1");
  }
  std::size_t total = 1;
  for (int i = 0; i < order; ++i) {
    if (total > cap / static_cast<std::size_t>(mode_dim)) {
      throw CapabilityError(
          "grid of " + std::to_string(mode_dim) + "^" + std::to_string(order) +
          " points exceeds the cap of " + std::to_string(cap) +
          "; reduce Z or N (e.g. Z <= " +
          std::to_string(static_cast<std::size_t>(
              std::floor(std::pow(static_cast<double>(cap), 1.0 / order)))) +
          " at this N), or raise the cap");
    }
    total *= static_cast<std::size_t>(mode_dim);
  }
  return total;
}

void decode_index(std::size_t flat, int order, int mode_dim, std::vector<int>& idx) {
  for (int pos = order - 1; pos >= 0; --pos) {
    idx[pos] = static_cast<int>(flat % static_cast<std::size_t>(mode_dim));
    flat /= static_cast<std::size_t>(mode_dim);
  }
}

}  // namespace

GridTensor build_grid_tensor(const GridFunctional& f, int order, int mode_dim,
                             std::size_t cap, int threads) {
  const std::size_t total = checked_grid_size(order, mode_dim, cap);
  GridTensor g;
  g.order = order;
  g.mode_dim = mode_dim;
  g.entries.resize(total);

  auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<int> idx(order);
    for (std::size_t flat = begin; flat < end; ++flat) {
      decode_index(flat, order, mode_dim, idx);
      g.entries[flat] = f(idx);
    }
  };

  if (threads <= 1 || total < 256) {
    worker(0, total);
    return g;
  }
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int nthreads = std::min<int>(threads, static_cast<int>(hw));
  std::vector<std::thread> pool;
  const std::size_t chunk = (total + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    const std::size_t begin = chunk * static_cast<std::size_t>(t);
    const std::size_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(worker, begin, end);
  }
  for (auto& th : pool) th.join();
  return g;
}

GridTensor build_grid_tensor(const NetworkSpec& n, const TemplateSet& t,
                             int seq_len, int position, int coordinate,
                             std::size_t cap, int threads) {
  t.validate();
  if (coordinate < 0 || coordinate >= n.width()) {
    throw InputError("grid coordinate out of range [0, width)");
  }
  if (position < 0 || position >= seq_len) {
    throw InputError("grid position out of range [0, seq_len)");
  }

  GridFunctional f;
  if (t.is_vocab()) {
    const auto* emb = std::get_if<VocabEmbedding>(&n.embedding);
    if (emb == nullptr) {
      throw InputError("token templates require a vocabulary embedding");
    }
    for (int tok : t.tokens) {
      if (tok < 0 || tok >= emb->vocab_size()) {
        throw InputError("template token out of the vocabulary range");
      }
    }
    f = [&n, &t, coordinate, position](const std::vector<int>& idx) {
      std::vector<int> tokens(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) tokens[i] = t.tokens[idx[i]];
      return network_forward(n, tokens)(coordinate, position);
    };
  } else {
    const auto* emb = std::get_if<ConvEmbedding>(&n.embedding);
    if (emb == nullptr) {
      throw InputError("patch templates require a conv embedding");
    }
    const int k = emb->kernel_width();
    f = [&n, &t, coordinate, position, k](const std::vector<int>& idx) {
      std::vector<Vector> raw;
      raw.reserve(idx.size() * static_cast<std::size_t>(k));
      for (int d : idx) {
        for (int l = 0; l < k; ++l) raw.push_back(t.patches[d]);
      }
      return network_forward(n, raw)(coordinate, position);
    };
  }
  GridTensor g = build_grid_tensor(f, seq_len, t.size(), cap, threads);
  g.position = position;
  g.coordinate = coordinate;
  g.source_hash = network_hash(n);
  g.templates = t;
  return g;
}

Matrix matricize(const GridTensor& g, const Partition& part) {
  part.validate(g.order);
  const int half = g.order / 2;
  const std::size_t side = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(g.mode_dim), half)));
  Matrix m(static_cast<Eigen::Index>(side), static_cast<Eigen::Index>(side));

  std::vector<int> idx(g.order);
  const std::size_t total = g.entries.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    decode_index(flat, g.order, g.mode_dim, idx);
    std::size_t row = 0, col = 0;
    for (int t = 0; t < half; ++t) {
      row = row * g.mode_dim + static_cast<std::size_t>(idx[part.p[t]]);
      col = col * g.mode_dim + static_cast<std::size_t>(idx[part.q[t]]);
    }
    m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
        g.entries[flat];
  }
  return m;
}

Matrix equilibrate_scale(Matrix m, int passes) {
  for (int pass = 0; pass < passes; ++pass) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double s = m.row(i).cwiseAbs().maxCoeff();
      if (s > 0.0) m.row(i) /= s;
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double s = m.col(j).cwiseAbs().maxCoeff();
      if (s > 0.0) m.col(j) /= s;
    }
  }
  return m;
}

int empirical_sep_lower_bound(const NetworkSpec& n, const TemplateSet& t,
                              const Partition& part, int position, int coordinate,
                              const RankTolerance& tol, std::size_t cap,
                              int threads) {
  const int seq_len = static_cast<int>(part.p.size() + part.q.size());
  const GridTensor g = build_grid_tensor(n, t, seq_len, position, coordinate,
                                         cap, threads);
  return numerical_rank(equilibrate_scale(matricize(g, part)), tol);
}

namespace {

// sample_count distinct length-`half` template assignments, encoded and
// decoded against mode_dim; covers all of them when few enough exist.
std::vector<std::vector<int>> sample_tuples(int half, int mode_dim,
                                            int sample_count, Rng& rng) {
  const double space = std::pow(static_cast<double>(mode_dim), half);
  std::vector<std::vector<int>> tuples;
  if (space <= static_cast<double>(sample_count)) {
    const std::size_t total = static_cast<std::size_t>(std::llround(space));
    tuples.resize(total, std::vector<int>(half));
    for (std::size_t flat = 0; flat < total; ++flat) {
      decode_index(flat, half, mode_dim, tuples[flat]);
    }
    return tuples;
  }
  std::set<std::vector<int>> seen;
  std::uniform_int_distribution<int> pick(0, mode_dim - 1);
  while (static_cast<int>(seen.size()) < sample_count) {
    std::vector<int> tuple(half);
    for (auto& v : tuple) v = pick(rng);
    seen.insert(std::move(tuple));
  }
  return {seen.begin(), seen.end()};
}

}  // namespace

int sampled_sep_lower_bound(const NetworkSpec& n, const TemplateSet& t,
                            const Partition& part, int position, int coordinate,
                            int sample_side, std::uint64_t seed,
                            const RankTolerance& tol, std::size_t cap) {
  t.validate();
  const int seq_len = static_cast<int>(part.p.size() + part.q.size());
  part.validate(seq_len);
  if (sample_side < 1) {
    throw InputError("sample_side must be >= 1");
  }
  if (static_cast<std::size_t>(sample_side) * sample_side > cap) {
    throw CapabilityError("sampled submatrix of " + std::to_string(sample_side) +
                          "^2 entries exceeds the cap of " + std::to_string(cap));
  }
  const int half = seq_len / 2;
  Rng rng(seed);
  const auto rows = sample_tuples(half, t.size(), sample_side, rng);
  const auto cols = sample_tuples(half, t.size(), sample_side, rng);

  const bool vocab = t.is_vocab();
  const auto* vemb = std::get_if<VocabEmbedding>(&n.embedding);
  const auto* cemb = std::get_if<ConvEmbedding>(&n.embedding);
  if (vocab && vemb == nullptr) {
    throw InputError("token templates require a vocabulary embedding");
  }
  if (!vocab && cemb == nullptr) {
    throw InputError("patch templates require a conv embedding");
  }

  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(cols.size()));
  std::vector<int> grid_idx(seq_len);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      for (int k = 0; k < half; ++k) {
        grid_idx[part.p[k]] = rows[r][k];
        grid_idx[part.q[k]] = cols[c][k];
      }
      double value = 0.0;
      if (vocab) {
        std::vector<int> tokens(seq_len);
        for (int i = 0; i < seq_len; ++i) tokens[i] = t.tokens[grid_idx[i]];
        value = network_forward(n, tokens)(coordinate, position);
      } else {
        std::vector<Vector> raw;
        const int kw = cemb->kernel_width();
        raw.reserve(static_cast<std::size_t>(seq_len) * kw);
        for (int i = 0; i < seq_len; ++i) {
          for (int l = 0; l < kw; ++l) raw.push_back(t.patches[grid_idx[i]]);
        }
        value = network_forward(n, raw)(coordinate, position);
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return numerical_rank(equilibrate_scale(std::move(m)), tol);
}

std::vector<SweepRow> rank_sweep(const SweepSpec& spec) {
  if (spec.param != "r" && spec.param != "L" && spec.param != "dx" &&
      spec.param != "Z") {
    throw InputError("sweep param must be one of r, L, dx, Z");
  }
  if (spec.values.empty() || spec.seeds.empty()) {
    throw InputError("sweep needs at least one value and one seed");
  }

  // Reject the whole sweep before doing any work if a point would blow the cap.
  for (int value : spec.values) {
    const int z = spec.param == "Z" ? value : spec.mode_dim;
    checked_grid_size(spec.seq_len, z, spec.cap);
  }

  std::vector<SweepRow> rows;
  rows.reserve(spec.values.size() * spec.seeds.size());
  for (int value : spec.values) {
    NetworkShape shape;
    shape.depth = spec.param == "L" ? value : spec.depth;
    shape.width = spec.param == "dx" ? value : spec.width;
    shape.heads = spec.heads;
    shape.attn_dim = spec.attn_dim;
    const int z = spec.param == "Z" ? value : spec.mode_dim;
    const int r = spec.param == "r" ? value : spec.embedding_rank;
    shape.embedding_rank = std::min(r, shape.width);
    shape.vocab_size = spec.vocab_size > 0
                           ? spec.vocab_size
                           : std::max(z, shape.embedding_rank);

    BoundInputs bi;
    bi.depth = shape.depth;
    bi.width = shape.width;
    bi.embedding_rank = shape.embedding_rank;
    bi.positional_rank = 1;
    bi.heads = shape.heads;
    bi.vocab_size = shape.vocab_size;
    const double log_upper = upper_bound(bi).log_value;
    const double log_lower = shape.depth >= 2 ? lower_bound(bi).log_value : 0.0;

    const TemplateSet templates = TemplateSet::first_tokens(z);
    const Partition part = Partition::alternating(spec.seq_len);
    for (std::uint64_t seed : spec.seeds) {
      const NetworkSpec net = random_vocab_network(shape, seed);
      SweepRow row;
      row.swept_param = spec.param;
      row.value = value;
      row.seed = seed;
      row.depth = shape.depth;
      row.width = shape.width;
      row.rank = shape.embedding_rank;
      row.heads = shape.heads;
      row.attn_dim = shape.attn_dim;
      row.seq_len = spec.seq_len;
      row.mode_dim = z;
      row.empirical_rank =
          empirical_sep_lower_bound(net, templates, part, spec.position,
                                    spec.coordinate, spec.tol, spec.cap,
                                    spec.threads);
      row.log_upper_bound = log_upper;
      row.log_lower_bound = log_lower;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "swept_param,value,seed,L,d_x,r,H,d_a,N,Z,empirical_rank,"
         "log_upper_bound,log_lower_bound\n";
  for (const auto& row : rows) {
    out << row.swept_param << ',' << row.value << ',' << row.seed << ','
        << row.depth << ',' << row.width << ',' << row.rank << ',' << row.heads
        << ',' << row.attn_dim << ',' << row.seq_len << ',' << row.mode_dim
        << ',' << row.empirical_rank << ',' << format_double(row.log_upper_bound)
        << ',' << format_double(row.log_lower_bound) << '\n';
  }
}

}  // namespace seprank
