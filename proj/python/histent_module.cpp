#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "histent/cli.hpp"
#include "histent/entropy.hpp"
#include "histent/error.hpp"
#include "histent/experiments.hpp"
#include "histent/maxent.hpp"
#include "histent/montecarlo.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// JSON strings cross the boundary; the Python package decodes them.
std::string exact_entropy(const std::string& model_json, const std::string& graining_json) {
  const auto model = histent::model_from_json(json::parse(model_json));
  const auto law = histent::model_law(model);
  if (!law) throw histent::ConfigError("model has no exact law", "model");
  const auto space = histent::model_space(model);
  const auto cg = histent::graining_from_json(json::parse(graining_json), space, histent::model_steps(model),
                                              histent::model_eta(model));
  const auto hd = histent::exact_history_probs(*law, histent::model_initial(model), cg, space);
  const double xs[] = {1.0, 1.5, 2.0};
  return histent::make_report(histent::entropy_terms(hd), xs, histent::step_by_step_entropy(hd, cg)).to_json().dump();
}

std::string mc_entropy(const std::string& model_json, const std::string& graining_json, std::size_t count,
                       std::uint64_t seed, unsigned workers, int resamples) {
  const auto model = histent::model_from_json(json::parse(model_json));
  const auto space = histent::model_space(model);
  const auto cg = histent::graining_from_json(json::parse(graining_json), space, histent::model_steps(model),
                                              histent::model_eta(model));
  const auto ensemble = histent::sample_trajectories(model, count, seed, workers);
  histent::EstimateOptions opt;
  opt.resamples = resamples;
  opt.seed = seed;
  const auto est = histent::entropy_with_error(ensemble, cg, space, opt);
  json j = histent::make_report(est.terms).to_json();
  j["ci_lo"] = est.ci_lo;
  j["ci_hi"] = est.ci_hi;
  j["distinct_classes"] = est.distinct;
  j["count"] = est.count;
  j["bias_warning"] = est.bias_warning;
  return j.dump();
}

std::string sweep(const std::string& model_json, std::vector<double> dx, std::vector<int> dt, std::size_t count,
                  std::uint64_t seed, unsigned workers, bool exact) {
  histent::SweepOptions opt;
  opt.dx = std::move(dx);
  opt.dt = std::move(dt);
  opt.count = count;
  opt.seed = seed;
  opt.workers = workers;
  opt.method = exact ? histent::Method::exact : histent::Method::monte_carlo;
  py::gil_scoped_release release;
  return histent::to_json(histent::sweep_entropy_vs_graining(histent::model_from_json(json::parse(model_json)), opt))
      .dump();
}

std::string urn_surface(int balls, int n0, int steps, std::vector<int> t1s, std::vector<int> ms) {
  return histent::to_json(histent::urn_two_time_surface({balls, n0, steps}, t1s, ms)).dump();
}

std::string urn_curves(int balls, int n0, int steps, std::vector<int> t1s, std::vector<int> ks) {
  return histent::to_json(histent::urn_multi_time_curves({balls, n0, steps}, t1s, ks)).dump();
}

std::string maxent_report(const std::string& model_json, const std::string& graining_json) {
  const auto model = histent::model_from_json(json::parse(model_json));
  const auto law = histent::model_law(model);
  if (!law) throw histent::ConfigError("model has no exact law", "model");
  const auto space = histent::model_space(model);
  const auto cg = histent::graining_from_json(json::parse(graining_json), space, histent::model_steps(model),
                                              histent::model_eta(model));
  return histent::verify_inequalities(*law, cg, histent::model_initial(model)).to_json().dump();
}

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"histent"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = histent::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  py::print(out.str(), py::arg("end") = "");
  py::print(err.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
  return code;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entropy of coarse-grained histories of classical stochastic processes";

  // Translators run newest first, so the base class goes in before its subclasses.
  const auto& base = py::register_exception<histent::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<histent::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<histent::CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<histent::ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<histent::InvariantViolation>(m, "InvariantViolation", base.ptr());

  m.def("urn_exact_prob", &histent::urn_exact_prob, py::arg("n_j"), py::arg("j"), py::arg("n_0"), py::arg("R"));
  m.def("urn_coefficients", &histent::urn_coefficients, py::arg("R"), py::arg("l"));
  m.def("entropy_functional", [](std::vector<double> p) { return histent::entropy_functional(p); });
  m.def("exact_entropy", &exact_entropy, py::arg("model"), py::arg("graining"));
  m.def("mc_entropy", &mc_entropy, py::arg("model"), py::arg("graining"), py::arg("count"), py::arg("seed"),
        py::arg("workers") = 0, py::arg("resamples") = 200);
  m.def("sweep", &sweep, py::arg("model"), py::arg("dx"), py::arg("dt"), py::arg("count"), py::arg("seed"),
        py::arg("workers") = 0, py::arg("exact") = false);
  m.def("urn_surface", &urn_surface, py::arg("balls"), py::arg("n0"), py::arg("steps"), py::arg("t1"), py::arg("m"));
  m.def("urn_curves", &urn_curves, py::arg("balls"), py::arg("n0"), py::arg("steps"), py::arg("t1"), py::arg("k"));
  m.def("maxent_report", &maxent_report, py::arg("model"), py::arg("graining"));
  m.def("run_cli", &run_cli, py::arg("args"));
  m.attr("__version__") = histent::kToolVersion;
}
