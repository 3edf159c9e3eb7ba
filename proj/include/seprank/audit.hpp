#pragma once

#include "seprank/bounds.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace seprank {

/// External architecture description. Required fields: name, vocab_size,
/// width, depth, heads. The rest default per diagnose-time conventions:
/// embedding_rank = min(vocab_size, width) (generic full-rank assumption),
/// attention_dim = floor(width / heads), positional_rank = min(width,
/// seq_len) when seq_len is known.
struct ArchConfig {
  std::string name;
  long long vocab_size = 0;
  int width = 0;
  int depth = 0;
  int heads = 0;
  long long embedding_rank = 0;
  int attn_dim = 0;
  std::optional<long long> seq_len;
  std::optional<long long> positional_rank;
  bool explicit_rank = false;
};

/// Parses and validates a config document; unknown fields are rejected and
/// errors name the offending field. Defaults are resolved here.
ArchConfig load_config(const nlohmann::json& doc);
ArchConfig load_config_file(const std::string& path);

struct ParamCounts {
  long long per_layer = 0;
  long long layers_total = 0;
  long long embedding = 0;
  long long positional = 0;
  long long total = 0;
};

/// Exact parameter counts of the analyzed architecture: 4 attention
/// matrices of attn_dim x width per head per layer, plus the (possibly
/// factored) embedding and positional matrices. The positional term needs
/// seq_len; requesting it without one is an error.
ParamCounts param_count(const ArchConfig& c, bool include_positional);
ParamCounts param_count(const ArchConfig& c);  // positional iff seq_len known

struct AuditReport {
  ArchConfig config;
  bool vocab_bottleneck = false;
  double vocab_ratio = 0.0;  // effective rank / width
  bool attention_overhang = false;
  double overhang_ratio = 0.0;  // heads * attn_dim / width
  DepthRegimeResult regime;
  AsymptoticScales scales;
  ParamCounts params;
  std::vector<std::string> notes;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Pure function of the config: flags, ratios, regime, bound scales, counts,
/// and pattern-matched annotations.
AuditReport diagnose(const ArchConfig& c);

struct ComparisonReport {
  AuditReport first, second;
  long long param_delta = 0;  // first.total - second.total
  std::string larger_lower_scale;  // config name, or "tie"

  std::string to_text() const;
};

ComparisonReport compare(const ArchConfig& c1, const ArchConfig& c2);

}  // namespace seprank
