#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clonesim/cli.hpp"
#include "clonesim/config.hpp"
#include "clonesim/dataset_io.hpp"
#include "clonesim/errors.hpp"
#include "clonesim/fit.hpp"
#include "clonesim/scenarios.hpp"

namespace py = pybind11;
using namespace clonesim;

namespace {

ModelParams params_from(const std::map<std::string, double>& overrides) {
  ModelParams p;
  for (const auto& [key, value] : overrides) set_param(p, key, value);
  validate(p);
  return p;
}

std::map<std::string, double> params_to_dict(const ModelParams& p) {
  std::map<std::string, double> out;
  for (const auto& name : param_names()) out[name] = get_param(p, name);
  return out;
}

ScenarioSpec preset(const std::string& experiment, const std::string& group, double n0,
                    const std::map<std::string, double>& params) {
  RunConfig c;
  c.preset = parse_preset(experiment);
  if (c.preset == Preset::custom) throw InvalidArgument("custom scenarios need a config document");
  c.group = parse_group(group);
  c.n0 = n0;
  c.params = params_from(params);
  return resolve_scenario(c);
}

py::dict fit_result_to_dict(const fit::FitResult& r) {
  py::dict estimates, intervals;
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    estimates[py::str(r.names[k])] = r.estimates[static_cast<Eigen::Index>(k)];
    const auto& iv = r.intervals[k];
    intervals[py::str(r.names[k])] =
        iv.bounded ? py::tuple(py::make_tuple(iv.lower, iv.upper)) : py::tuple(py::make_tuple(py::none(), py::none()));
  }
  py::dict out;
  out["estimates"] = estimates;
  out["intervals"] = intervals;
  out["params"] = params_to_dict(r.params);
  out["residual_norm"] = r.residual_norm;
  out["initial_residual_norm"] = r.initial_residual_norm;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["solver_failed"] = r.solver_failed;
  out["message"] = r.message;
  out["level"] = r.level;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Delay-differential model of T-cell clonal expansion";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);
  py::register_exception<UndefinedObservable>(m, "UndefinedObservable", PyExc_ArithmeticError);

  m.def("default_params", [] { return params_to_dict(ModelParams{}); }, "Default parameter values.");
  m.def("fittable_params", &fittable_param_names);
  m.def(
      "proliferation_rate", [](int division, const std::map<std::string, double>& params) {
        return proliferation_rate(division, params_from(params));
      },
      py::arg("division"), py::arg("params") = std::map<std::string, double>{});
  m.def(
      "naive_supply_rate",
      [](double t, double dose, double t_c) { return naive_supply_rate(t, {.dose = dose, .t_c = t_c}); },
      py::arg("t"), py::arg("dose"), py::arg("t_c"));
  m.def(
      "antigen_supply_rate",
      [](double t, double dose, double t_k) { return antigen_supply_rate(t, {.dose = dose, .t_k = t_k}); },
      py::arg("t"), py::arg("dose") = 1.0, py::arg("t_k") = 0.0);

  py::class_<ScenarioSpec>(m, "Scenario")
      .def_property_readonly("horizon", [](const ScenarioSpec& s) { return s.horizon; })
      .def_property_readonly("cohorts", [](const ScenarioSpec& s) {
        std::vector<std::string> labels;
        for (const auto& c : s.cohorts) labels.push_back(c.label);
        return labels;
      })
      .def_property_readonly("start_time", &start_time)
      .def_property_readonly("observation_times", [](const ScenarioSpec& s) { return s.observation_times; })
      .def_property_readonly("params", [](const ScenarioSpec& s) { return params_to_dict(s.params); })
      .def("supplied_cells", &supplied_cells, py::arg("cohort") = 0);

  m.def("scenario", &preset, py::arg("experiment"), py::arg("group") = "i", py::arg("n0") = 8.5,
        py::arg("params") = std::map<std::string, double>{},
        "Experiment preset: 'experiment1' (uses n0), 'experiment2' or 'experiment3' (use group).");
  m.def(
      "scenario_from_config", [](const std::string& json) { return resolve_scenario(parse_config(json)); },
      py::arg("json"));

  py::class_<SimulationResult>(m, "Simulation")
      .def_property_readonly("scenario", &SimulationResult::spec)
      .def_property_readonly("t0", [](const SimulationResult& r) { return r.trajectory().t0(); })
      .def_property_readonly("t1", [](const SimulationResult& r) { return r.trajectory().t1(); })
      .def("state", &SimulationResult::state, py::arg("t"))
      .def("antigen", &SimulationResult::antigen, py::arg("t"))
      .def("naive", &SimulationResult::naive, py::arg("t"), py::arg("cohort") = 0)
      .def("total", &SimulationResult::total, py::arg("t"), py::arg("cohort") = kAllCohorts)
      .def("recruitment", [](const SimulationResult& r, int cohort) {
        return recruitment_fraction(r, cohort, supplied_cells(r.spec(), cohort));
      }, py::arg("cohort") = 0)
      .def("division_profile", &division_profile, py::arg("t"), py::arg("cohort") = 0)
      .def("activated_totals", &cohort_activated_totals, py::arg("t"));

  m.def(
      "simulate",
      [](const ScenarioSpec& spec, double step_h, bool verify) {
        py::gil_scoped_release release;
        return run(spec, {.step_h = step_h, .verify = verify});
      },
      py::arg("scenario"), py::arg("step_h") = 0.0, py::arg("verify") = false);

  m.def("profile_mode", &profile_mode);
  m.def("profile_support", &profile_support, py::arg("profile"), py::arg("threshold") = 1.0);
  m.def(
      "recruitment_regression",
      [](const std::vector<std::pair<double, double>>& points) {
        const auto r = recruitment_regression(points);
        return py::dict(py::arg("slope") = r.slope, py::arg("intercept") = r.intercept,
                        py::arg("r_squared") = r.r_squared);
      },
      py::arg("points"), "Least squares of recruitment % against log10 dose over (dose, recruitment) pairs.");

  m.def(
      "synthesize_dataset",
      [](const std::map<std::string, double>& params, double noise, std::uint64_t seed) {
        std::ostringstream out;
        write_dataset(out, fit::synthesize_data(params_from(params), noise, seed));
        return out.str();
      },
      py::arg("params") = std::map<std::string, double>{}, py::arg("noise") = 0.0, py::arg("seed") = 0,
      "Synthetic dataset as CSV text.");

  m.def(
      "fit",
      [](const std::string& csv, const std::vector<std::string>& free, const std::map<std::string, double>& start,
         int max_iterations, bool balance_blocks) {
        std::istringstream in(csv);
        auto problem = fit::make_problem(read_dataset(in), free, params_from(start));
        problem.control.max_iterations = max_iterations;
        problem.control.balance_blocks = balance_blocks;
        fit::FitResult result;
        {
          py::gil_scoped_release release;
          result = fit::fit(problem);
        }
        return fit_result_to_dict(result);
      },
      py::arg("data"), py::arg("free") = fittable_param_names(), py::arg("start") = std::map<std::string, double>{},
      py::arg("max_iterations") = 60, py::arg("balance_blocks") = true, "Fit parameters to a CSV dataset.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
