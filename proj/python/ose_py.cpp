#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "ose/arch_space.hpp"
#include "ose/config.hpp"
#include "ose/cost_model.hpp"
#include "ose/errors.hpp"
#include "ose/ose_engine.hpp"
#include "ose/surrogate_metrics.hpp"
#include "ose/toy_net.hpp"
#include "ose/verify.hpp"

namespace py = pybind11;
using namespace ose;

namespace {

std::string rank_json(const std::string& config_text,
                      const std::vector<std::string>& overrides,
                      const std::optional<std::string>& measurements) {
  auto cfg = parse_config(config_text, overrides);
  if (measurements) cfg.measurements = *measurements;
  std::optional<MetricMap> ingested;
  if (cfg.search.metric_mode == MetricMode::kIngested) {
    if (!cfg.measurements) throw ConfigError("ingested mode needs measurements");
    std::ifstream in(*cfg.measurements);
    if (!in) throw ConfigError("cannot open measurements '" + cfg.measurements->string() + "'");
    ingested = ingest_measurements(in, cfg.search.emb);
  }
  return to_json(run_extraction(cfg.search, ingested ? &*ingested : nullptr));
}

std::vector<Eigen::MatrixXd> toy_forward(const ArchParams& arch, const EmbeddingConfig& emb,
                                         std::uint64_t seed,
                                         const std::vector<std::vector<std::int64_t>>& rows) {
  const toy::ToyNet net({arch, emb, 0.0, 1e-5, seed});
  toy::TokenBatch batch{static_cast<std::int64_t>(rows.size()), emb.seq, {}};
  for (const auto& row : rows) {
    if (static_cast<std::int64_t>(row.size()) != emb.seq) {
      throw DataError("every token row must have length seq");
    }
    batch.ids.insert(batch.ids.end(), row.begin(), row.end());
  }
  return net.forward(batch);
}

}  // namespace

PYBIND11_MODULE(_ose, m) {
  m.doc() = "Optimal subarchitecture extraction for BERT-style encoders";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<ArchParams>(m, "ArchParams")
      .def(py::init<std::int64_t, std::int64_t, std::int64_t, std::int64_t>(),
           py::arg("depth"), py::arg("heads"), py::arg("hidden"), py::arg("intermediate"))
      .def_readwrite("depth", &ArchParams::depth)
      .def_readwrite("heads", &ArchParams::heads)
      .def_readwrite("hidden", &ArchParams::hidden)
      .def_readwrite("intermediate", &ArchParams::intermediate)
      .def("__eq__", [](const ArchParams& a, const ArchParams& b) { return a == b; })
      .def("__lt__", [](const ArchParams& a, const ArchParams& b) { return a < b; })
      .def("__hash__", [](const ArchParams& a) {
        return py::hash(py::make_tuple(a.depth, a.heads, a.hidden, a.intermediate));
      })
      .def("__repr__", [](const ArchParams& a) { return to_string(a); });

  py::class_<EmbeddingConfig>(m, "EmbeddingConfig")
      .def(py::init([](std::int64_t vocab, std::int64_t typepos, std::int64_t seq,
                       std::int64_t batch) {
             return EmbeddingConfig{vocab, typepos, seq, batch};
           }),
           py::arg("vocab") = 50265, py::arg("typepos") = 514, py::arg("seq") = 512,
           py::arg("batch") = 1024)
      .def_readwrite("vocab", &EmbeddingConfig::vocab)
      .def_readwrite("typepos", &EmbeddingConfig::typepos)
      .def_readwrite("seq", &EmbeddingConfig::seq)
      .def_readwrite("batch", &EmbeddingConfig::batch);

  m.def("validate",
        [](const ArchParams& a) {
          std::vector<std::string> out;
          for (const auto v : validate(a).violations) out.push_back(describe(v, a));
          return out;
        },
        "Violated invariants, empty when valid.");
  m.def("enumerate",
        [](std::vector<std::int64_t> d, std::vector<std::int64_t> a,
           std::vector<std::int64_t> h, std::vector<std::int64_t> i, std::int64_t epsilon) {
          return enumerate(stride_subsample(SearchSpace::make(d, a, h, i), epsilon));
        },
        py::arg("depths"), py::arg("heads"), py::arg("hiddens"), py::arg("intermediates"),
        py::arg("epsilon") = 1);
  m.def("default_grid", [] { return enumerate(default_search_space()); });

  m.def("param_count", &param_count, py::arg("arch"), py::arg("emb") = EmbeddingConfig{});
  m.def("flop_count", &flop_count, py::arg("arch"));
  m.def("embedding_params", &embedding_params, py::arg("arch"),
        py::arg("emb") = EmbeddingConfig{});

  m.def("w_coefficient",
        [](double p, double i, double e, double p_max, double i_max) {
          const MaxPoint t{{24, 16, 1024, 4096}, {p_max, i_max, LatencyUnit::kFlops, 1.0}};
          return w_coefficient({p, i, LatencyUnit::kFlops, e}, t);
        },
        py::arg("p"), py::arg("i"), py::arg("e"), py::arg("p_max"), py::arg("i_max"));
  m.def("rank_json", &rank_json, py::arg("config") = "",
        py::arg("overrides") = std::vector<std::string>{},
        py::arg("measurements") = std::nullopt,
        "Runs an extraction and returns the JSON report.");

  m.def("gelu", &toy::gelu);
  m.def("kd_loss", &toy::kd_loss, py::arg("student"), py::arg("teacher"),
        py::arg("mlm_loss"), py::arg("weight") = 0.5, py::arg("temperature") = 2.0);
  m.def("toy_forward", &toy_forward, py::arg("arch"), py::arg("emb"), py::arg("seed"),
        py::arg("tokens"), "Encoder output per token row.");

  m.def("verify", [] {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& r : run_verification()) out.emplace_back(r.name, r.passed, r.detail);
    return out;
  });
}
