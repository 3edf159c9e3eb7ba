#include "doctest.h"

#include "seprank/audit.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

using namespace seprank;
using nlohmann::json;

TEST_CASE("load_config applies defaults") {
  const ArchConfig c = load_config(json{{"name", "toy"},
                                        {"vocab_size", 2000},
                                        {"width", 680},
                                        {"depth", 12},
                                        {"heads", 2}});
  CHECK(c.embedding_rank == 680);  // min(V, d_x), full-rank assumption
  CHECK(c.attn_dim == 340);        // floor(d_x / H)
  CHECK_FALSE(c.explicit_rank);
  CHECK_FALSE(c.seq_len.has_value());
}

TEST_CASE("load_config explicit fields") {
  const ArchConfig albert = load_config(json{{"name", "albert"},
                                             {"vocab_size", 30000},
                                             {"width", 4096},
                                             {"depth", 12},
                                             {"heads", 64},
                                             {"embedding_rank", 128}});
  CHECK(albert.embedding_rank == 128);
  CHECK(albert.explicit_rank);

  const ArchConfig t5 = load_config(json{{"name", "t5-11b"},
                                         {"vocab_size", 32128},
                                         {"width", 1024},
                                         {"depth", 24},
                                         {"heads", 128},
                                         {"attention_dim", 128}});
  CHECK(t5.attn_dim == 128);
}

TEST_CASE("load_config schema errors name the field") {
  CHECK_THROWS_WITH_AS(load_config(json{{"name", "x"},
                                        {"vocab_size", 10},
                                        {"width", 4},
                                        {"depth", 1},
                                        {"heads", 1},
                                        {"w_matrix", 3}}),
                       doctest::Contains("w_matrix"), SchemaError);
  CHECK_THROWS_WITH_AS(load_config(json{{"name", "x"},
                                        {"vocab_size", 10},
                                        {"width", 4},
                                        {"heads", 1}}),
                       doctest::Contains("depth"), SchemaError);
  CHECK_THROWS_WITH_AS(load_config(json{{"name", "x"},
                                        {"vocab_size", 10},
                                        {"width", 0},
                                        {"depth", 1},
                                        {"heads", 1}}),
                       doctest::Contains("width"), SchemaError);
  CHECK_THROWS_WITH_AS(load_config(json{{"name", "x"},
                                        {"vocab_size", 10},
                                        {"width", 4},
                                        {"depth", 1},
                                        {"heads", 1},
                                        {"embedding_rank", 5}}),
                       doctest::Contains("embedding_rank"), SchemaError);
}

TEST_CASE("diagnose flags the published bottleneck configurations") {
  SUBCASE("ALBERT-like factored rank") {
    const AuditReport rep = diagnose(load_config(json{{"name", "albert"},
                                                      {"vocab_size", 30000},
                                                      {"width", 4096},
                                                      {"depth", 12},
                                                      {"heads", 64},
                                                      {"embedding_rank", 128}}));
    CHECK(rep.vocab_bottleneck);
    CHECK(rep.vocab_ratio == 128.0 / 4096.0);
    CHECK_FALSE(rep.attention_overhang);
    // The matched pattern carries its published-measurement annotation.
    bool annotated = false;
    for (const auto& note : rep.notes) {
      if (note.find("25%") != std::string::npos) annotated = true;
    }
    CHECK(annotated);
  }

  SUBCASE("ESM-1b-like character vocabulary") {
    const AuditReport rep = diagnose(load_config(json{{"name", "esm"},
                                                      {"vocab_size", 33},
                                                      {"width", 1280},
                                                      {"depth", 33},
                                                      {"heads", 20}}));
    CHECK(rep.vocab_bottleneck);
    CHECK(rep.vocab_ratio == 33.0 / 1280.0);
  }

  SUBCASE("T5-11B-like attention overhang") {
    const AuditReport rep = diagnose(load_config(json{{"name", "t5"},
                                                      {"vocab_size", 32128},
                                                      {"width", 1024},
                                                      {"depth", 24},
                                                      {"heads", 128},
                                                      {"attention_dim", 128}}));
    CHECK(rep.attention_overhang);
    CHECK(rep.overhang_ratio == 16.0);
    CHECK_FALSE(rep.vocab_bottleneck);
  }

  SUBCASE("pixel-vocabulary deep model") {
    const AuditReport rep = diagnose(load_config(json{{"name", "sparse"},
                                                      {"vocab_size", 256},
                                                      {"width", 512},
                                                      {"depth", 128},
                                                      {"heads", 8}}));
    CHECK(rep.vocab_bottleneck);  // any width > 256 is capped by V
  }
}

TEST_CASE("flag/ratio consistency over fuzzed configs") {
  Rng rng(77);
  std::uniform_int_distribution<int> vdist(1, 4000), wdist(1, 2048),
      ldist(1, 64), hdist(1, 64), dadist(1, 256);
  for (int trial = 0; trial < 200; ++trial) {
    json doc{{"name", "fuzz"},
             {"vocab_size", vdist(rng)},
             {"width", wdist(rng)},
             {"depth", ldist(rng)},
             {"heads", hdist(rng)},
             {"attention_dim", dadist(rng)}};
    const AuditReport rep = diagnose(load_config(doc));
    const auto& c = rep.config;
    CHECK(rep.vocab_bottleneck ==
          (std::min(c.embedding_rank, static_cast<long long>(c.width)) < c.width));
    CHECK(rep.attention_overhang ==
          (static_cast<long long>(c.heads) * c.attn_dim > c.width));
    CHECK(rep.vocab_ratio ==
          static_cast<double>(std::min(c.embedding_rank,
                                       static_cast<long long>(c.width))) /
              c.width);
  }
}

TEST_CASE("diagnose is deterministic") {
  const ArchConfig c = load_config(json{{"name", "bert"},
                                        {"vocab_size", 30522},
                                        {"width", 768},
                                        {"depth", 12},
                                        {"heads", 12},
                                        {"seq_len", 512}});
  CHECK(diagnose(c).to_text() == diagnose(c).to_text());
  CHECK(diagnose(c).to_json().dump() == diagnose(c).to_json().dump());
}

TEST_CASE("param_count") {
  SUBCASE("hand-counted example") {
    const ArchConfig c = load_config(json{{"name", "tiny"},
                                          {"vocab_size", 3},
                                          {"width", 4},
                                          {"depth", 1},
                                          {"heads", 1},
                                          {"attention_dim", 2},
                                          {"seq_len", 2}});
    const ParamCounts counts = param_count(c);
    CHECK(counts.per_layer == 32);   // 4 matrices * 1 head * 2 * 4
    CHECK(counts.embedding == 12);   // 3 * 4
    CHECK(counts.positional == 8);   // 2 * 4
    CHECK(counts.total == 52);
  }

  SUBCASE("doubling heads doubles the per-layer count") {
    json doc{{"name", "x"},      {"vocab_size", 100}, {"width", 16},
             {"depth", 3},       {"heads", 2},        {"attention_dim", 4}};
    const long long base = param_count(load_config(doc)).per_layer;
    doc["heads"] = 4;
    CHECK(param_count(load_config(doc)).per_layer == 2 * base);
  }

  SUBCASE("factored embedding") {
    const ArchConfig c = load_config(json{{"name", "x"},
                                          {"vocab_size", 8},
                                          {"width", 4},
                                          {"depth", 1},
                                          {"heads", 1},
                                          {"embedding_rank", 1}});
    CHECK(param_count(c).embedding == 12);  // 8*1 + 1*4, vs 32 full
  }

  SUBCASE("positional requires seq_len") {
    const ArchConfig c = load_config(json{{"name", "x"},
                                          {"vocab_size", 8},
                                          {"width", 4},
                                          {"depth", 1},
                                          {"heads", 1}});
    CHECK(param_count(c).positional == 0);
    CHECK_THROWS_AS(param_count(c, true), InputError);
  }

  SUBCASE("full-rank costs at least as much as factored in the useful range") {
    // r < V*d_x/(V+d_x) makes the factorization strictly smaller.
    for (long long v : {50, 300}) {
      for (int w : {16, 64}) {
        for (long long r = 1; r <= std::min<long long>(v, w); ++r) {
          json doc{{"name", "x"}, {"vocab_size", v}, {"width", w},
                   {"depth", 1},  {"heads", 1},      {"embedding_rank", r}};
          const long long factored = param_count(load_config(doc)).embedding;
          doc.erase("embedding_rank");
          const long long full = param_count(load_config(doc)).embedding;
          if (r < v * w / (v + w)) {
            CHECK(full >= factored);
          }
        }
      }
    }
  }
}

TEST_CASE("compare") {
  const json base{{"name", "same"}, {"vocab_size", 100}, {"width", 16},
                  {"depth", 4},     {"heads", 2}};
  const ComparisonReport same = compare(load_config(base), load_config(base));
  CHECK(same.param_delta == 0);
  CHECK(same.larger_lower_scale == "tie");

  // Shared small rank r=8: the deeper network wins the lower-bound scale
  // when the shallow one is wider than r.
  const ArchConfig deep = load_config(json{{"name", "deep"},
                                           {"vocab_size", 100},
                                           {"width", 16},
                                           {"depth", 8},
                                           {"heads", 2},
                                           {"embedding_rank", 8}});
  const ArchConfig shallow = load_config(json{{"name", "shallow"},
                                              {"vocab_size", 100},
                                              {"width", 32},
                                              {"depth", 4},
                                              {"heads", 2},
                                              {"embedding_rank", 8}});
  // Scales: deep 8*(8-2) = 48, shallow 4*(8-2) = 24.
  const ComparisonReport rep = compare(deep, shallow);
  CHECK(rep.larger_lower_scale == "deep");

  // With r >= both widths the comparison is governed by L * d_x.
  const ArchConfig wide = load_config(json{{"name", "wide"},
                                           {"vocab_size", 100},
                                           {"width", 32},
                                           {"depth", 4},
                                           {"heads", 2}});
  const ArchConfig narrow = load_config(json{{"name", "narrow"},
                                             {"vocab_size", 100},
                                             {"width", 16},
                                             {"depth", 8},
                                             {"heads", 2}});
  // 4*(32-2) = 120 vs 8*(16-2) = 112.
  CHECK(compare(wide, narrow).larger_lower_scale == "wide");
}
