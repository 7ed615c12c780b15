#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "astm/checks.hpp"
#include "astm/errors.hpp"
#include "astm/harness.hpp"

namespace py = pybind11;
using namespace astm;

namespace {

// JSON crosses the boundary as text; the Python wrapper does json.loads/dumps.
ExperimentConfig config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
  return experiment_from_json(j);
}

// Plain lists instead of the numpy-backed Eigen caster, which breaks against numpy 2 here.
using List = std::vector<double>;

Vector to_vector(const List& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }
List to_list(const Vector& v) { return List(v.data(), v.data() + v.size()); }

Geometry geometry_named(const std::string& name, std::size_t dim) {
  if (name == "euclidean") return Geometry::euclidean(dim);
  if (name == "entropy") return Geometry::entropy(dim);
  throw ConfigError("geometry must be 'euclidean' or 'entropy'");
}

}  // namespace

PYBIND11_MODULE(_astm, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);

  m.def("norm", [](const std::string& geom, const List& x) {
    return norm(geometry_named(geom, x.size()), to_vector(x));
  });
  m.def("dual_norm", [](const std::string& geom, const List& x) {
    return dual_norm(geometry_named(geom, x.size()), to_vector(x));
  });
  m.def("bregman", [](const std::string& geom, const List& x, const List& y) {
    return bregman(geometry_named(geom, x.size()), to_vector(x), to_vector(y));
  });

  m.def("derive_params",
        [](double L, double R_Q, double epsilon, double beta, double kappa) {
          SolverConfig c;
          c.lipschitz = L;
          c.L0 = L;
          c.R_Q = R_Q;
          c.epsilon = epsilon;
          c.beta = beta;
          const DerivedParams p = derive_params(c, kappa);
          return py::dict(py::arg("N") = p.N, py::arg("omega") = p.omega,
                          py::arg("omega_tilde") = p.omega_tilde, py::arg("kappa") = p.kappa);
        },
        py::arg("L"), py::arg("R_Q"), py::arg("epsilon"), py::arg("beta"), py::arg("kappa") = 1.0);
  m.def("compute_alpha", &compute_alpha, py::arg("A"), py::arg("L"));
  m.def("batch_size", &batch_size, py::arg("sigma"), py::arg("omega_tilde"), py::arg("alpha"),
        py::arg("epsilon"));
  m.def("calibrate_sigma_gaussian", &calibrate_sigma_gaussian, py::arg("noise_std"), py::arg("dim"));
  m.def("soft_threshold", [](const List& v, double t) { return to_list(soft_threshold(to_vector(v), t)); },
        py::arg("v"), py::arg("t"));

  m.def("_solve",
        [](const std::string& config_text) {
          const ExperimentConfig cfg = config_from_text(config_text);
          const Experiment e = build_experiment(cfg);
          SolverResult r;
          {
            py::gil_scoped_release release;
            r = solve(e.problem, e.solver, e.x0);
          }
          nlohmann::json s = summary_json(r, e.solver);
          s["F_star"] = e.optimum.value;
          return py::make_tuple(s.dump(), trace_csv(r.trace), to_list(r.x_final));
        });
  m.def("_ensemble", [](const std::string& config_text) {
    const ExperimentConfig cfg = config_from_text(config_text);
    EnsembleResult res;
    {
      py::gil_scoped_release release;
      res = run_ensemble(cfg);
    }
    return report_json(res, cfg).dump();
  });
  m.def("_default_config", [](const std::string& which) {
    if (which == "noiseless") return experiment_to_json(default_noiseless_experiment()).dump();
    if (which == "stochastic") return experiment_to_json(default_stochastic_experiment()).dump();
    throw ConfigError("unknown default config '" + which + "'");
  });
  m.def("cli_main", &cli_main, py::arg("args"));
}
