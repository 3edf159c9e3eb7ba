#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seprank/audit.hpp"
#include "seprank/bounds.hpp"
#include "seprank/septensor.hpp"
#include "seprank/witness.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace seprank;

namespace {

py::object big_to_py(const BigCount& v) {
  return py::module_::import("builtins").attr("int")(v.str());
}

py::object maybe_big(const std::optional<BigCount>& v) {
  if (!v) return py::none();
  return big_to_py(*v);
}

BoundInputs inputs_from_args(int depth, int width, int rank, int positional_rank,
                             int heads, std::optional<long long> vocab) {
  BoundInputs in;
  in.depth = depth;
  in.width = width;
  in.embedding_rank = rank;
  in.positional_rank = positional_rank;
  in.heads = heads;
  in.vocab_size = vocab;
  return in;
}

py::dict audit_to_dict(const AuditReport& rep) {
  return py::module_::import("json").attr("loads")(rep.to_json().dump());
}

}  // namespace

PYBIND11_MODULE(_seprank, m) {
  m.doc() = "Separation-rank analysis of unnormalized self-attention stacks";
  m.attr("__version__") = "0.1.0";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  // numerics
  m.def(
      "numerical_rank",
      [](const Matrix& matrix, double tol) {
        return numerical_rank(matrix, RankTolerance{tol});
      },
      py::arg("matrix"), py::arg("tol") = 1e-8,
      "Number of singular values above tol * sigma_max.");
  m.def(
      "multiset_coeff",
      [](long long n, long long k) { return big_to_py(multiset_coeff(n, k)); },
      py::arg("n"), py::arg("k"));
  m.def("log_multiset", &log_multiset, py::arg("n"), py::arg("k"));
  m.def(
      "composition_count",
      [](int depth) { return big_to_py(composition_count(depth)); },
      py::arg("depth"), "(3^depth - 1) / 2");

  // bounds
  m.def(
      "upper_bound",
      [](int depth, int width, int rank, int positional_rank) {
        const UpperBound u = upper_bound(
            inputs_from_args(depth, width, rank, positional_rank, 1, {}));
        py::dict d;
        d["exact"] = maybe_big(u.exact);
        d["log"] = u.log_value;
        return d;
      },
      py::arg("depth"), py::arg("width"), py::arg("rank"),
      py::arg("positional_rank") = 1);
  m.def(
      "lower_bound",
      [](int depth, int width, int rank, int heads, int positional_rank,
         std::optional<long long> vocab_size) {
        const LowerBound l = lower_bound(inputs_from_args(
            depth, width, rank, positional_rank, heads, vocab_size));
        py::dict d;
        d["exact"] = maybe_big(l.exact);
        d["log"] = l.log_value;
        d["depth_ok"] = l.flags.depth_ok;
        d["heads_ok"] = l.flags.heads_ok;
        d["vocab"] = to_string(l.flags.vocab);
        return d;
      },
      py::arg("depth"), py::arg("width"), py::arg("rank"), py::arg("heads"),
      py::arg("positional_rank") = 1, py::arg("vocab_size") = py::none());
  m.def(
      "asymptotic_logs",
      [](int depth, int width, int rank, int heads) {
        const AsymptoticScales s =
            asymptotic_logs(inputs_from_args(depth, width, rank, 1, heads, {}));
        return py::make_tuple(s.upper_scale, s.lower_scale);
      },
      py::arg("depth"), py::arg("width"), py::arg("rank"), py::arg("heads"));
  m.def(
      "depth_regime",
      [](int depth, int width) {
        const DepthRegimeResult r = depth_regime(depth, width);
        py::dict d;
        d["regime"] = to_string(r.regime);
        d["threshold"] = r.threshold;
        return d;
      },
      py::arg("depth"), py::arg("width"));

  // model
  py::class_<NetworkSpec>(m, "Network",
                          "Immutable random attention stack over a vocabulary "
                          "embedding; forward() maps token ids to outputs.")
      .def_property_readonly("depth", &NetworkSpec::depth)
      .def_property_readonly("width", &NetworkSpec::width)
      .def_property_readonly("heads", &NetworkSpec::heads)
      .def_property_readonly("attn_dim", &NetworkSpec::attn_dim)
      .def("forward",
           [](const NetworkSpec& n, const std::vector<int>& tokens) {
             return network_forward(n, tokens);
           },
           py::arg("tokens"));
  m.def(
      "random_network",
      [](int depth, int heads, int width, int attn_dim, int vocab_size,
         int embedding_rank, std::uint64_t seed) {
        NetworkShape shape;
        shape.depth = depth;
        shape.heads = heads;
        shape.width = width;
        shape.attn_dim = attn_dim;
        shape.vocab_size = vocab_size;
        shape.embedding_rank = embedding_rank;
        return random_vocab_network(shape, seed);
      },
      py::arg("depth"), py::arg("heads"), py::arg("width"), py::arg("attn_dim"),
      py::arg("vocab_size"), py::arg("embedding_rank") = 0, py::arg("seed") = 0);
  m.def(
      "low_rank_vocab_matrix",
      [](int width, int vocab_size, int rank, std::uint64_t seed) {
        return low_rank_factor(width, vocab_size, rank, seed).vocab_matrix;
      },
      py::arg("width"), py::arg("vocab_size"), py::arg("rank"), py::arg("seed") = 0,
      "Gaussian rank-r factored vocabulary matrix (width x vocab_size).");

  // septensor
  m.def(
      "grid_rank",
      [](int depth, int width, int rank, int heads, int attn_dim, int seq_len,
         int templates, std::uint64_t seed, double tol, int threads) {
        NetworkShape shape;
        shape.depth = depth;
        shape.heads = heads;
        shape.width = width;
        shape.attn_dim = attn_dim;
        shape.embedding_rank = std::min(rank, width);
        shape.vocab_size = std::max(templates, shape.embedding_rank);
        const NetworkSpec net = random_vocab_network(shape, seed);
        const int measured = empirical_sep_lower_bound(
            net, TemplateSet::first_tokens(templates),
            Partition::alternating(seq_len), 0, 0, RankTolerance{tol},
            kDefaultGridCap, threads);

        BoundInputs bi = inputs_from_args(depth, width, shape.embedding_rank, 1,
                                          heads, shape.vocab_size);
        py::dict d;
        d["empirical_rank"] = measured;
        d["log_upper"] = upper_bound(bi).log_value;
        d["log_lower"] = depth >= 2 ? lower_bound(bi).log_value : 0.0;
        return d;
      },
      py::arg("depth"), py::arg("width"), py::arg("rank"), py::arg("heads"),
      py::arg("attn_dim"), py::arg("seq_len"), py::arg("templates"),
      py::arg("seed") = 0, py::arg("tol") = 1e-7, py::arg("threads") = 1,
      "Empirical separation-rank lower bound of a seeded random network, "
      "with the matching analytic log bounds.");

  // witness
  m.def("phi_index", &phi_index, py::arg("j"), py::arg("attn_dim"));
  m.def(
      "verify_hadamard_rank",
      [](const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& a,
         int power, double tol) {
        return verify_hadamard_rank(make_witness_matrix(a), power,
                                    RankTolerance{tol});
      },
      py::arg("a"), py::arg("power"), py::arg("tol") = 1e-8);
  m.def(
      "search_hadamard_witness",
      [](int dim, int power, std::uint64_t seed,
         int max_trials) -> py::object {
        const auto found = search_hadamard_witness(dim, power, seed, max_trials);
        if (!found) return py::none();
        return py::cast(found->entries);
      },
      py::arg("dim"), py::arg("power"), py::arg("seed") = 0,
      py::arg("max_trials") = 10000);

  // audit
  m.def(
      "diagnose",
      [](const py::dict& config) {
        const std::string dumped =
            py::module_::import("json").attr("dumps")(config).cast<std::string>();
        return audit_to_dict(diagnose(load_config(nlohmann::json::parse(dumped))));
      },
      py::arg("config"),
      "Bottleneck diagnostics for an architecture config given as a dict.");
  m.def(
      "diagnose_file",
      [](const std::string& path) {
        return audit_to_dict(diagnose(load_config_file(path)));
      },
      py::arg("path"));
}
