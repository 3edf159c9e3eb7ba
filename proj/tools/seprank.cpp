// seprank: separation-rank bound calculators, grid-tensor rank measurement,
// witness construction, and architecture audits for unnormalized
// self-attention stacks.

#include "seprank/audit.hpp"
#include "seprank/bounds.hpp"
#include "seprank/septensor.hpp"
#include "seprank/witness.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 2 usage/schema, 3 strict-audit flag raised, 4 capability
// cap, 5 witness verification failure, 6 witness search exhausted.
enum ExitCode {
  kOk = 0,
  kUsage = 2,
  kStrictFlag = 3,
  kCapability = 4,
  kVerifyFailed = 5,
  kSearchExhausted = 6,
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::size_t grid_cap_from_env() {
  if (const char* raw = std::getenv("SEPRANK_GRID_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (end == raw || *end != '\0' || v == 0) {
      throw seprank::InputError(
          "SEPRANK_GRID_CAP must be a positive integer, got '" + std::string(raw) + "'");
    }
    return static_cast<std::size_t>(v);
  }
  return seprank::kDefaultGridCap;
}

struct ManifestWriter {
  std::string subcommand;
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::vector<std::string> outputs;
  std::string path;       // explicit --manifest value, may be empty
  bool disabled = false;

  void write() const {
    if (disabled) return;
    std::string target = path;
    if (target.empty()) {
      target = outputs.empty() ? subcommand + ".manifest.json"
                               : outputs.front() + ".manifest.json";
    }
    nlohmann::ordered_json m;
    m["tool"] = "seprank";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["flags"] = flags;
    if (seed) m["seed"] = *seed;
    if (tolerance) m["tolerance"] = *tolerance;
    m["outputs"] = outputs;
    std::ofstream out(target);
    out << m.dump(2) << "\n";
  }
};

void write_file_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

seprank::Partition parse_partition(const std::string& kind, int n) {
  if (kind == "alternating") return seprank::Partition::alternating(n);
  if (kind == "contiguous") return seprank::Partition::contiguous(n);
  throw seprank::InputError("partition must be 'alternating' or 'contiguous'");
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsArgs {
  int depth = 0, width = 0, rank = 0, positional_rank = 1, heads = 1;
  std::optional<long long> vocab;
  ManifestWriter manifest;
};

int run_bounds(const BoundsArgs& args) {
  seprank::BoundInputs in;
  in.depth = args.depth;
  in.width = args.width;
  in.embedding_rank = args.rank;
  in.positional_rank = args.positional_rank;
  in.heads = args.heads;
  in.vocab_size = args.vocab;

  const seprank::BoundReport rep = seprank::bound_report(in);
  std::ostringstream out;
  out << "bounds: L=" << in.depth << " d_x=" << in.width << " r=" << in.embedding_rank
      << " r_e=" << in.positional_rank << " H=" << in.heads;
  if (in.vocab_size) out << " V=" << *in.vocab_size;
  out << "\n";
  out << "  upper_exact: "
      << (rep.upper.exact ? rep.upper.exact->str() : "n/a (3^L exceeds the exact range)")
      << "\n";
  out << "  upper_log: " << fmt(rep.upper.log_value) << "\n";
  out << "  upper_log2: " << fmt(rep.upper.log_value / std::log(2.0)) << "\n";
  if (rep.lower) {
    out << "  lower_exact: "
        << (rep.lower->exact ? rep.lower->exact->str() : "n/a") << "\n";
    out << "  lower_log: " << fmt(rep.lower->log_value) << "\n";
    out << "  flags: depth_ok=" << (rep.lower->flags.depth_ok ? "true" : "false")
        << " heads_ok=" << (rep.lower->flags.heads_ok ? "true" : "false")
        << " vocab=" << seprank::to_string(rep.lower->flags.vocab) << "\n";
  } else {
    out << "  lower: n/a (needs L >= 2)\n";
  }
  out << "  scales: upper " << fmt(rep.scales.upper_scale) << ", lower "
      << fmt(rep.scales.lower_scale) << "\n";
  out << "  depth_regime: " << seprank::to_string(rep.regime.regime)
      << " (threshold " << fmt(rep.regime.threshold) << ")\n";
  std::cout << out.str();
  args.manifest.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// audit

struct AuditArgs {
  std::string config_path;
  std::string name = "inline";
  std::optional<long long> vocab;
  std::optional<int> width, depth, heads, attn_dim;
  std::optional<long long> rank, seq_len, positional_rank;
  std::string json_out;
  bool strict = false;
  ManifestWriter manifest;
};

int run_audit(AuditArgs& args) {
  nlohmann::json doc;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw seprank::SchemaError("cannot open config file: " + args.config_path);
    try {
      in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
      throw seprank::SchemaError("config is not valid JSON: " + std::string(e.what()));
    }
  } else {
    doc["name"] = args.name;
  }
  // Inline overrides win over file contents.
  if (args.vocab) doc["vocab_size"] = *args.vocab;
  if (args.width) doc["width"] = *args.width;
  if (args.depth) doc["depth"] = *args.depth;
  if (args.heads) doc["heads"] = *args.heads;
  if (args.rank) doc["embedding_rank"] = *args.rank;
  if (args.attn_dim) doc["attention_dim"] = *args.attn_dim;
  if (args.seq_len) doc["seq_len"] = *args.seq_len;
  if (args.positional_rank) doc["positional_rank"] = *args.positional_rank;

  const seprank::ArchConfig config = seprank::load_config(doc);
  const seprank::AuditReport rep = seprank::diagnose(config);
  std::cout << rep.to_text();
  if (!args.json_out.empty()) {
    write_file_atomically(args.json_out, rep.to_json().dump(2) + "\n");
    args.manifest.outputs.push_back(args.json_out);
  }
  args.manifest.write();
  if (args.strict && (rep.vocab_bottleneck || rep.attention_overhang)) {
    return kStrictFlag;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// grid

struct GridArgs {
  int depth = 2, width = 4, rank = 0, heads = 1, attn_dim = 2, seq_len = 4,
      templates = 4;
  std::optional<int> vocab;
  std::uint64_t seed = 0;
  double tol = seprank::kGridRankTolerance.relative_threshold;
  std::string partition = "alternating";
  int position = 0, coordinate = 0;
  int threads = 1;
  int sample_side = 0;  // 0 = exhaustive grid
  std::string out;
  ManifestWriter manifest;
};

int run_grid(GridArgs& args) {
  const std::size_t cap = grid_cap_from_env();
  const int rank = args.rank > 0 ? std::min(args.rank, args.width) : args.width;
  const int vocab = args.vocab.value_or(std::max(args.templates, rank));

  seprank::NetworkShape shape;
  shape.depth = args.depth;
  shape.heads = args.heads;
  shape.width = args.width;
  shape.attn_dim = args.attn_dim;
  shape.vocab_size = vocab;
  shape.embedding_rank = rank;
  const seprank::NetworkSpec net = seprank::random_vocab_network(shape, args.seed);

  const seprank::TemplateSet templates =
      seprank::TemplateSet::first_tokens(args.templates);
  const seprank::Partition part = parse_partition(args.partition, args.seq_len);
  const seprank::RankTolerance tol{args.tol};
  const int rank_measured =
      args.sample_side > 0
          ? seprank::sampled_sep_lower_bound(net, templates, part, args.position,
                                             args.coordinate, args.sample_side,
                                             args.seed, tol, cap)
          : seprank::empirical_sep_lower_bound(net, templates, part,
                                               args.position, args.coordinate,
                                               tol, cap, args.threads);

  seprank::BoundInputs bi;
  bi.depth = args.depth;
  bi.width = args.width;
  bi.embedding_rank = rank;
  bi.positional_rank = 1;
  bi.heads = args.heads;
  bi.vocab_size = vocab;
  const double log_upper = seprank::upper_bound(bi).log_value;
  double log_lower = 0.0;
  bool lower_applicable = false;
  seprank::BigCount lower_exact = 1;
  if (args.depth >= 2) {
    const seprank::LowerBound lb = seprank::lower_bound(bi);
    log_lower = lb.log_value;
    if (lb.exact) lower_exact = *lb.exact;
    lower_applicable = lb.flags.heads_ok && lb.flags.depth_ok;
  }
  const bool upper_ok =
      std::log(static_cast<double>(std::max(rank_measured, 1))) <= log_upper + 1e-12;
  const bool lower_ok = !lower_applicable || seprank::BigCount(rank_measured) >= lower_exact;

  std::ostringstream out;
  out << "grid: L=" << args.depth << " d_x=" << args.width << " r=" << rank
      << " H=" << args.heads << " d_a=" << args.attn_dim << " N=" << args.seq_len
      << " Z=" << args.templates << " V=" << vocab << " seed=" << args.seed
      << " tol=" << fmt(args.tol) << " partition=" << args.partition;
  if (args.sample_side > 0) out << " sample=" << args.sample_side;
  out << "\n";
  out << "  empirical_rank: " << rank_measured << "\n";
  out << "  log_upper_bound: " << fmt(log_upper) << "\n";
  out << "  log_lower_bound: " << fmt(log_lower) << "\n";
  out << "  sandwich_holds: " << ((upper_ok && lower_ok) ? "true" : "false") << "\n";
  std::cout << out.str();

  if (!args.out.empty()) {
    seprank::SweepRow row;
    row.swept_param = "none";
    row.value = 0;
    row.seed = args.seed;
    row.depth = args.depth;
    row.width = args.width;
    row.rank = rank;
    row.heads = args.heads;
    row.attn_dim = args.attn_dim;
    row.seq_len = args.seq_len;
    row.mode_dim = args.templates;
    row.empirical_rank = rank_measured;
    row.log_upper_bound = log_upper;
    row.log_lower_bound = log_lower;
    std::ostringstream csv;
    seprank::write_sweep_csv(csv, {row});
    write_file_atomically(args.out, csv.str());
    args.manifest.outputs.push_back(args.out);
  }
  args.manifest.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string param = "r";
  std::vector<int> values;
  int num_seeds = 3;
  std::uint64_t seed_base = 0;
  int depth = 2, width = 4, rank = 2, heads = 1, attn_dim = 2, seq_len = 4,
      templates = 4;
  std::optional<int> vocab;
  double tol = seprank::kGridRankTolerance.relative_threshold;
  int threads = 1;
  std::string out;
  ManifestWriter manifest;
};

int run_sweep(SweepArgs& args) {
  seprank::SweepSpec spec;
  spec.param = args.param;
  spec.values = args.values;
  for (int s = 0; s < args.num_seeds; ++s) {
    spec.seeds.push_back(args.seed_base + static_cast<std::uint64_t>(s));
  }
  spec.depth = args.depth;
  spec.width = args.width;
  spec.embedding_rank = args.rank;
  spec.heads = args.heads;
  spec.attn_dim = args.attn_dim;
  spec.seq_len = args.seq_len;
  spec.mode_dim = args.templates;
  spec.vocab_size = args.vocab.value_or(0);
  spec.tol = seprank::RankTolerance{args.tol};
  spec.cap = grid_cap_from_env();
  spec.threads = args.threads;

  const auto rows = seprank::rank_sweep(spec);
  std::ostringstream csv;
  seprank::write_sweep_csv(csv, rows);
  write_file_atomically(args.out, csv.str());
  args.manifest.outputs.push_back(args.out);
  std::cout << "sweep: wrote " << rows.size() << " data rows to " << args.out << "\n";
  args.manifest.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// witness

struct WitnessArgs {
  std::string mode;  // vocab | conv | largeN | hadamard
  int block_cols = 2;   // d
  int power = 1;        // lambda
  std::optional<int> attn_dim;
  int heads = 1;
  std::optional<int> width;
  std::optional<int> seq_len;
  int kernel_width = 2;
  std::optional<int> input_dim;
  std::uint64_t seed = 0;
  int max_trials = 10000;
  ManifestWriter manifest;
};

int depth_for_power(int power) {
  // lambda must be 3^(L-2) for some integer depth L >= 2.
  int depth = 2;
  long long p = 1;
  while (p < power) {
    p *= 3;
    ++depth;
  }
  if (p != power) {
    throw seprank::InputError("lambda must be a power of 3 (it stands for 3^(L-2))");
  }
  return depth;
}

int run_witness(WitnessArgs& args) {
  using seprank::AssignmentBundle;
  std::ostringstream out;
  out << "witness " << args.mode << ": d=" << args.block_cols
      << " lambda=" << args.power << " H=" << args.heads << " seed=" << args.seed
      << "\n";

  const auto found = seprank::search_hadamard_witness(
      args.block_cols, args.power, args.seed, args.max_trials);
  if (!found) {
    out << "  search: no verified witness within " << args.max_trials
        << " trials (search limitation, not a refutation)\n";
    std::cout << out.str();
    return kSearchExhausted;
  }
  out << "  search: found a verified A (rows=" << found->rows()
      << ", row_norm_sq=" << found->row_norm_sq << ")\n";

  if (args.mode == "hadamard") {
    const bool ok = seprank::verify_hadamard_rank(*found, args.power);
    out << "  check hadamard_rank: " << (ok ? "PASS" : "FAIL") << "\n";
    out << "A:\n" << found->entries << "\n";
    std::cout << out.str();
    args.manifest.write();
    return ok ? kOk : kVerifyFailed;
  }

  const int d = args.block_cols;
  const int attn_dim = args.attn_dim.value_or(2 * d + 1);
  AssignmentBundle bundle;
  if (args.mode == "vocab") {
    const int rank_budget = 2 * d + args.heads;
    const int width = args.width.value_or(3 * attn_dim);
    bundle = seprank::build_vocab_witness(*found, width, attn_dim, args.heads,
                                          rank_budget, depth_for_power(args.power));
  } else if (args.mode == "conv") {
    const int rank_budget = 2 * d + args.heads;
    // One full block by default; the indicator kernel spends one unit of
    // rank per ones slot, so wide conv witnesses need more heads.
    const int width = args.width.value_or(attn_dim);
    const int input_dim = args.input_dim.value_or(
        (width + args.kernel_width - 1) / args.kernel_width);
    bundle = seprank::build_conv_witness(*found, width, attn_dim, args.heads,
                                         rank_budget, input_dim, args.kernel_width);
  } else if (args.mode == "largeN") {
    const int rank_budget = 2 * d + 1 + args.heads;
    const int width = args.width.value_or(3 * attn_dim);
    const long long max_entry = found->entries.maxCoeff();
    const int min_seq =
        static_cast<int>(max_entry * (rank_budget - 1 - args.heads));
    const int seq_len = args.seq_len.value_or(min_seq + (min_seq % 2));
    bundle = seprank::build_largeN_witness(*found, width, attn_dim, args.heads,
                                           rank_budget, seq_len);
    out << "  seq_len: " << seq_len << " (minimum " << min_seq << ")\n";
  } else {
    throw CLI::ValidationError("--mode", "unknown witness mode: " + args.mode);
  }

  const seprank::VerifyResult verdict = seprank::verify_witness(bundle, args.seed);
  out << "  check pattern_equality: " << (verdict.pass ? "PASS" : "FAIL");
  if (!verdict.pass) out << " (" << verdict.detail << ")";
  out << "\n";
  const int measured_rank =
      bundle.kind == AssignmentBundle::Kind::conv
          ? seprank::numerical_rank(
                seprank::ConvEmbedding{bundle.conv_kernel, seprank::Matrix{}}
                    .reshaped_kernel())
          : seprank::numerical_rank(bundle.vocab_matrix);
  const bool rank_ok = measured_rank <= bundle.rank_budget;
  out << "  check rank_budget: " << (rank_ok ? "PASS" : "FAIL") << " (rank "
      << measured_rank << " <= r = " << bundle.rank_budget << ")\n";
  std::cout << out.str();
  args.manifest.write();
  return (verdict.pass && rank_ok) ? kOk : kVerifyFailed;
}

void add_manifest_flags(CLI::App* cmd, ManifestWriter& manifest) {
  cmd->add_option("--manifest", manifest.path,
                  "Manifest sidecar path (default: <out>.manifest.json or "
                  "<subcommand>.manifest.json)");
  cmd->add_flag("--no-manifest", manifest.disabled, "Do not write a manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"separation-rank analysis of unnormalized self-attention stacks"};
  app.set_version_flag("--version", std::string("seprank ") + kVersion);
  app.require_subcommand(1);

  BoundsArgs bounds_args;
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "Exact and log-space separation-rank bounds");
  bounds_cmd->add_option("--L", bounds_args.depth, "depth (layers)")->required();
  bounds_cmd->add_option("--dx", bounds_args.width, "width d_x")->required();
  bounds_cmd->add_option("--r", bounds_args.rank, "embedding rank r")->required();
  bounds_cmd->add_option("--re", bounds_args.positional_rank,
                         "positional embedding rank r_e (default 1)");
  bounds_cmd->add_option("--H", bounds_args.heads, "attention heads (default 1)");
  bounds_cmd->add_option("--V", bounds_args.vocab,
                         "vocabulary size (enables the vocab-assumption flag)");
  add_manifest_flags(bounds_cmd, bounds_args.manifest);

  AuditArgs audit_args;
  auto* audit_cmd = app.add_subcommand(
      "audit", "Bottleneck diagnostics for an architecture configuration");
  audit_cmd->add_option("--config", audit_args.config_path,
                        "JSON config file (see configs/)");
  audit_cmd->add_option("--name", audit_args.name, "config name (inline mode)");
  audit_cmd->add_option("--V", audit_args.vocab, "vocabulary size");
  audit_cmd->add_option("--dx", audit_args.width, "width d_x");
  audit_cmd->add_option("--L", audit_args.depth, "depth");
  audit_cmd->add_option("--H", audit_args.heads, "heads");
  audit_cmd->add_option("--r", audit_args.rank, "embedding rank");
  audit_cmd->add_option("--da", audit_args.attn_dim, "attention dimension d_a");
  audit_cmd->add_option("--N", audit_args.seq_len, "sequence length");
  audit_cmd->add_option("--re", audit_args.positional_rank, "positional rank");
  audit_cmd->add_option("--json", audit_args.json_out,
                        "write the machine-readable report here");
  audit_cmd->add_flag("--strict", audit_args.strict,
                      "exit 3 when any bottleneck flag is raised");
  add_manifest_flags(audit_cmd, audit_args.manifest);

  GridArgs grid_args;
  auto* grid_cmd = app.add_subcommand(
      "grid", "Empirical separation-rank lower bound via a grid tensor");
  grid_cmd->add_option("--L", grid_args.depth, "depth")->required();
  grid_cmd->add_option("--dx", grid_args.width, "width d_x")->required();
  grid_cmd->add_option("--r", grid_args.rank,
                       "embedding rank (default: full rank)");
  grid_cmd->add_option("--H", grid_args.heads, "heads (default 1)");
  grid_cmd->add_option("--da", grid_args.attn_dim, "attention dimension")->required();
  grid_cmd->add_option("--N", grid_args.seq_len, "sequence length (even)")->required();
  grid_cmd->add_option("--Z", grid_args.templates, "number of templates")->required();
  grid_cmd->add_option("--V", grid_args.vocab,
                       "vocabulary size (default max(Z, r))");
  grid_cmd->add_option("--seed", grid_args.seed, "RNG seed (default 0)");
  grid_cmd->add_option("--tol", grid_args.tol,
                       "relative rank tolerance (default 1e-7)");
  grid_cmd->add_option("--partition", grid_args.partition,
                       "alternating|contiguous (default alternating)");
  grid_cmd->add_option("--position", grid_args.position, "output position (default 0)");
  grid_cmd->add_option("--coordinate", grid_args.coordinate,
                       "output coordinate (default 0)");
  grid_cmd->add_option("--threads", grid_args.threads,
                       "parallelism for grid evaluation (default 1)");
  grid_cmd->add_option("--sample", grid_args.sample_side,
                       "evaluate a seeded SAMPLE x SAMPLE submatrix of the "
                       "matricization instead of the full grid (still a valid "
                       "lower bound)");
  grid_cmd->add_option("--out", grid_args.out, "write a one-row CSV here");
  add_manifest_flags(grid_cmd, grid_args.manifest);

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Empirical-rank sweep over r, L, dx, or Z; emits CSV");
  sweep_cmd->add_option("--param", sweep_args.param, "one of r, L, dx, Z")->required();
  sweep_cmd->add_option("--values", sweep_args.values, "swept values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep_args.num_seeds, "seeds per value (default 3)");
  sweep_cmd->add_option("--seed-base", sweep_args.seed_base,
                        "first seed value (default 0)");
  sweep_cmd->add_option("--L", sweep_args.depth, "fixed depth (default 2)");
  sweep_cmd->add_option("--dx", sweep_args.width, "fixed width (default 4)");
  sweep_cmd->add_option("--r", sweep_args.rank, "fixed embedding rank (default 2)");
  sweep_cmd->add_option("--H", sweep_args.heads, "fixed heads (default 1)");
  sweep_cmd->add_option("--da", sweep_args.attn_dim, "fixed attention dim (default 2)");
  sweep_cmd->add_option("--N", sweep_args.seq_len, "sequence length (default 4)");
  sweep_cmd->add_option("--Z", sweep_args.templates, "templates (default 4)");
  sweep_cmd->add_option("--V", sweep_args.vocab, "vocabulary size (default derived)");
  sweep_cmd->add_option("--tol", sweep_args.tol, "rank tolerance (default 1e-7)");
  sweep_cmd->add_option("--threads", sweep_args.threads, "grid parallelism");
  sweep_cmd->add_option("--out", sweep_args.out, "output CSV path")->required();
  add_manifest_flags(sweep_cmd, sweep_args.manifest);

  WitnessArgs witness_args;
  auto* witness_cmd = app.add_subcommand(
      "witness", "Construct and verify lower-bound witness assignments");
  witness_cmd
      ->add_option("--mode", witness_args.mode, "vocab | conv | largeN | hadamard")
      ->required()
      ->check(CLI::IsMember({"vocab", "conv", "largeN", "hadamard"}));
  witness_cmd->add_option("--d", witness_args.block_cols,
                          "columns of the witness matrix A (default 2)");
  witness_cmd->add_option("--lambda", witness_args.power,
                          "Hadamard power, a power of 3 (default 1)");
  witness_cmd->add_option("--da", witness_args.attn_dim,
                          "attention dimension (default 2d+1)");
  witness_cmd->add_option("--H", witness_args.heads, "heads (default 1)");
  witness_cmd->add_option("--dx", witness_args.width, "width (default 3*da)");
  witness_cmd->add_option("--N", witness_args.seq_len,
                          "sequence length (largeN mode)");
  witness_cmd->add_option("--k", witness_args.kernel_width,
                          "conv kernel width (default 2)");
  witness_cmd->add_option("--dinput", witness_args.input_dim,
                          "conv input dimension (default ceil(dx/k))");
  witness_cmd->add_option("--seed", witness_args.seed, "search seed (default 0)");
  witness_cmd->add_option("--max-trials", witness_args.max_trials,
                          "search budget (default 10000)");
  add_manifest_flags(witness_cmd, witness_args.manifest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (bounds_cmd->parsed()) {
      bounds_args.manifest.subcommand = "bounds";
      auto& f = bounds_args.manifest.flags;
      f["L"] = bounds_args.depth;
      f["dx"] = bounds_args.width;
      f["r"] = bounds_args.rank;
      f["re"] = bounds_args.positional_rank;
      f["H"] = bounds_args.heads;
      if (bounds_args.vocab) f["V"] = *bounds_args.vocab;
      return run_bounds(bounds_args);
    }
    if (audit_cmd->parsed()) {
      audit_args.manifest.subcommand = "audit";
      auto& f = audit_args.manifest.flags;
      if (!audit_args.config_path.empty()) f["config"] = audit_args.config_path;
      f["strict"] = audit_args.strict;
      return run_audit(audit_args);
    }
    if (grid_cmd->parsed()) {
      grid_args.manifest.subcommand = "grid";
      auto& f = grid_args.manifest.flags;
      f["L"] = grid_args.depth;
      f["dx"] = grid_args.width;
      f["r"] = grid_args.rank;
      f["H"] = grid_args.heads;
      f["da"] = grid_args.attn_dim;
      f["N"] = grid_args.seq_len;
      f["Z"] = grid_args.templates;
      f["partition"] = grid_args.partition;
      f["threads"] = grid_args.threads;
      grid_args.manifest.seed = grid_args.seed;
      grid_args.manifest.tolerance = grid_args.tol;
      return run_grid(grid_args);
    }
    if (sweep_cmd->parsed()) {
      sweep_args.manifest.subcommand = "sweep";
      auto& f = sweep_args.manifest.flags;
      f["param"] = sweep_args.param;
      f["values"] = sweep_args.values;
      f["seeds"] = sweep_args.num_seeds;
      f["seed_base"] = sweep_args.seed_base;
      f["L"] = sweep_args.depth;
      f["dx"] = sweep_args.width;
      f["r"] = sweep_args.rank;
      f["H"] = sweep_args.heads;
      f["da"] = sweep_args.attn_dim;
      f["N"] = sweep_args.seq_len;
      f["Z"] = sweep_args.templates;
      f["threads"] = sweep_args.threads;
      sweep_args.manifest.tolerance = sweep_args.tol;
      return run_sweep(sweep_args);
    }
    if (witness_cmd->parsed()) {
      witness_args.manifest.subcommand = "witness";
      auto& f = witness_args.manifest.flags;
      f["mode"] = witness_args.mode;
      f["d"] = witness_args.block_cols;
      f["lambda"] = witness_args.power;
      f["H"] = witness_args.heads;
      witness_args.manifest.seed = witness_args.seed;
      return run_witness(witness_args);
    }
  } catch (const seprank::CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapability;
  } catch (const seprank::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const seprank::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}
