#include "clonesim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "clonesim/config.hpp"
#include "clonesim/dataset_io.hpp"
#include "clonesim/errors.hpp"
#include "clonesim/fit.hpp"
#include "clonesim/scenarios.hpp"

namespace clonesim::cli {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> preset;
  std::optional<std::string> group;
  std::optional<double> n0;
  std::optional<double> antigen_dose;
  std::vector<std::string> params;
  std::optional<double> step_h;
  std::optional<double> grid_h;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool dump_config = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--preset", o.preset, "experiment1 | experiment2 | experiment3 | custom");
  cmd->add_option("--group", o.group, "Experiment 2/3 group: i | ii | iii");
  cmd->add_option("--n0", o.n0, "Experiment 1 initial naive density");
  cmd->add_option("--antigen-dose", o.antigen_dose, "Antigen dose as a fraction of the injected dose");
  cmd->add_option("--param", o.params, "Model parameter override KEY=VALUE (repeatable)");
  cmd->add_option("--step-h", o.step_h, "Integrator step in hours (default tau/16)");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out", o.out, "Output path ('-' for stdout)");
  cmd->add_flag("--dump-config", o.dump_config, "Print the resolved configuration and exit");
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidArgument("expected KEY=VALUE, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw InvalidArgument("not a number: '" + text + "'");
  return v;
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.preset) c.preset = parse_preset(*o.preset);
  if (o.group) c.group = parse_group(*o.group);
  if (o.n0) c.n0 = *o.n0;
  if (o.antigen_dose) c.antigen_dose = *o.antigen_dose;
  for (const auto& kv : o.params) {
    const auto [key, value] = split_assignment(kv);
    set_param(c.params, key, parse_double(value));
  }
  if (o.step_h) c.solver.step_h = *o.step_h;
  if (o.grid_h) c.output.grid_h = *o.grid_h;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output.path = *o.out;
  validate(c.params);
  if (!(c.output.grid_h > 0.0)) throw InvalidArgument("grid spacing must be positive");
  return c;
}

// Writes to the configured path, or `fallback` for "-".
void emit(const RunConfig& c, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (c.output.path.empty() || c.output.path == "-") {
    body(fallback);
    return;
  }
  std::ofstream file(c.output.path);
  if (!file) throw InvalidArgument("cannot write '" + c.output.path + "'");
  body(file);
}

std::vector<double> output_grid(const ScenarioSpec& spec, double spacing) {
  const double t0 = start_time(spec);
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((spec.horizon - t0) / spacing + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) grid.push_back(t0 + spacing * static_cast<double>(k));
  grid.push_back(spec.horizon);
  for (double t : spec.observation_times) {
    if (t >= t0) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             grid.end());
  return grid;
}

void write_trajectory(std::ostream& os, const SimulationResult& sim, const std::vector<double>& grid) {
  const auto& layout = sim.layout();
  const int K = layout.depth();
  os << "time_h,antigen";
  for (int c = 0; c < layout.cohorts(); ++c) {
    const std::string p = sim.spec().cohorts[static_cast<std::size_t>(c)].label + ".";
    os << ',' << p << 'N';
    for (int i = 1; i <= K; ++i) os << ',' << p << "T_" << i;
    os << ',' << p << "D_N";
    for (int i = 1; i < K; ++i) os << ',' << p << "D_" << i;
    os << ',' << p << "total";
  }
  os << '\n';
  for (double t : grid) {
    const auto y = sim.state(t);
    os << format_number(t) << ',' << format_number(y[StateLayout::antigen()]);
    for (int c = 0; c < layout.cohorts(); ++c) {
      const auto b = layout.cohort_begin(c);
      for (std::size_t k = 0; k < layout.block(); ++k) os << ',' << format_number(y[b + k]);
      os << ',' << format_number(total_t_cells(y, layout, c));
    }
    os << '\n';
  }
}

std::string arm_label(double n0) {
  std::ostringstream ss;
  ss << n0;
  return ss.str();
}

void write_report(std::ostream& os, const RunConfig& c) {
  os << "experiment,arm,metric,value\n";
  auto row = [&os](std::string_view e, std::string_view arm, std::string_view metric, double v) {
    os << e << ',' << arm << ',' << metric << ',' << format_number(v) << '\n';
  };
  const std::string exp(to_string(c.preset));
  if (c.preset == Preset::experiment1) {
    std::vector<ScenarioSpec> specs;
    for (double n0 : kExperiment1Arms) {
      RunConfig arm = c;
      arm.n0 = n0;
      specs.push_back(resolve_scenario(arm));
    }
    auto sims = run_all(specs, c.solver);
    std::map<double, SimulationResult> arms;
    std::vector<std::pair<double, double>> recruitment;
    const std::vector<std::pair<std::string, double>> days{{"day0", 0.0}, {"day7", 168.0}, {"day42", 1008.0}};
    for (std::size_t a = 0; a < sims.size(); ++a) {
      const double n0 = kExperiment1Arms[a];
      const auto& sim = sims[a];
      for (const auto& [name, t] : days) row(exp, arm_label(n0), "total_" + name, sim.total(t));
      const double rec = recruitment_fraction(sim, 0, supplied_cells(sim.spec(), 0));
      row(exp, arm_label(n0), "recruitment_pct", rec);
      recruitment.emplace_back(n0, rec);
      arms.emplace(n0, std::move(sims[a]));
    }
    for (const auto& [name, t] : days) row(exp, "all", "fold_" + name, fold_difference(arms, t));
    const auto reg = recruitment_regression(recruitment);
    row(exp, "all", "regression_slope", reg.slope);
    row(exp, "all", "regression_r2", reg.r_squared);
    return;
  }
  if (c.preset == Preset::custom) throw InvalidArgument("report needs an experiment preset");
  std::vector<ScenarioSpec> specs;
  for (Group g : {Group::i, Group::ii, Group::iii}) {
    RunConfig arm = c;
    arm.group = g;
    specs.push_back(resolve_scenario(arm));
  }
  const auto sims = run_all(specs, c.solver);
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const auto& sim = sims[k];
    const std::string g(to_string(static_cast<Group>(k)));
    const double horizon = sim.spec().horizon;
    row(exp, g, "recruitment_pct", recruitment_fraction(sim, 0, supplied_cells(sim.spec(), 0)));
    try {
      const auto profile = division_profile(sim, horizon, 0);
      row(exp, g, "profile_mode", profile_mode(profile));
      for (std::size_t i = 0; i < profile.size(); ++i) {
        row(exp, g, "profile_div_" + std::to_string(i + 1), profile[i]);
      }
    } catch (const UndefinedObservable&) {
      row(exp, g, "profile_mode", std::nan(""));
    }
    const auto activated = cohort_activated_totals(sim, horizon);
    for (std::size_t i = 0; i < activated.size(); ++i) {
      row(exp, g, "activated_" + sim.spec().cohorts[i].label, activated[i]);
    }
  }
}

int cmd_simulate(const Overrides& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  if (o.dump_config) {
    out << dump_config(c);
    return kOk;
  }
  const ScenarioSpec spec = resolve_scenario(c);
  const auto sim = run(spec, c.solver);
  emit(c, out, [&](std::ostream& os) { write_trajectory(os, sim, output_grid(spec, c.output.grid_h)); });
  return kOk;
}

int cmd_report(const Overrides& o, std::ostream& out) {
  const RunConfig c = resolve(o);
  if (o.dump_config) {
    out << dump_config(c);
    return kOk;
  }
  std::ostringstream buffer;
  write_report(buffer, c);
  emit(c, out, [&](std::ostream& os) { os << buffer.str(); });
  return kOk;
}

int cmd_synthesize(const Overrides& o, double noise, std::ostream& out) {
  const RunConfig c = resolve(o);
  const auto data = fit::synthesize_data(c.params, noise, c.seed, c.solver);
  emit(c, out, [&](std::ostream& os) { write_dataset(os, data); });
  return kOk;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

void write_fit_report(std::ostream& os, const fit::FitResult& r, const fit::FitProblem& problem) {
  os << "parameter,value,status,initial,ci_lower,ci_upper\n";
  for (const auto& name : param_names()) {
    const auto it = std::find(r.names.begin(), r.names.end(), name);
    os << name << ',' << format_number(get_param(r.params, name));
    if (it == r.names.end()) {
      os << ",fixed,,,\n";
      continue;
    }
    const auto k = static_cast<std::size_t>(it - r.names.begin());
    const auto& ci = r.intervals[k];
    os << ",free," << format_number(r.initial[static_cast<Eigen::Index>(k)]) << ',' << format_number(ci.lower)
       << ',' << format_number(ci.upper) << '\n';
  }
  os << "\nkey,value\n";
  os << "records," << problem.data.records.size() << '\n';
  os << "residual_norm," << format_number(r.residual_norm) << '\n';
  os << "initial_residual_norm," << format_number(r.initial_residual_norm) << '\n';
  os << "iterations," << r.iterations << '\n';
  os << "converged," << (r.converged ? "true" : "false") << '\n';
  os << "solver_failed," << (r.solver_failed ? "true" : "false") << '\n';
  os << "confidence_level," << format_number(r.level) << '\n';
  os << "message," << r.message << '\n';
  os << "\niteration,cost,lambda,accepted\n";
  for (const auto& l : r.log) {
    os << l.iteration << ',' << format_number(l.cost) << ',' << format_number(l.lambda) << ','
       << (l.accepted ? 1 : 0) << '\n';
  }
}

int cmd_fit(const Overrides& o, const std::string& data_path, const std::vector<std::string>& free_flags,
            std::optional<int> max_iterations, std::optional<int> starts, bool central, std::ostream& out) {
  RunConfig c = resolve(o);
  if (!free_flags.empty()) c.fit.free = split_list(free_flags);
  if (max_iterations) c.fit.max_iterations = *max_iterations;
  if (starts) c.fit.starts = *starts;
  if (central) c.fit.central_differences = true;
  if (o.dump_config) {
    out << dump_config(c);
    return kOk;
  }
  fit::DataSet data = read_dataset_file(data_path);
  if (data.records.empty()) throw InvalidArgument("dataset '" + data_path + "' has no records");

  fit::FitProblem problem = fit::make_problem(std::move(data), c.fit.free, c.params);
  for (auto& f : problem.free) {
    if (const auto it = c.fit.bounds.find(f.name); it != c.fit.bounds.end()) {
      f.lower = it->second.first;
      f.upper = it->second.second;
    }
  }
  problem.control.max_iterations = c.fit.max_iterations;
  problem.control.central_differences = c.fit.central_differences;
  problem.control.balance_blocks = c.fit.balance_blocks;
  problem.control.level = c.fit.level;
  problem.control.solver = c.solver;

  fit::FitResult best = fit::fit(problem);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  for (int s = 1; s < c.fit.starts; ++s) {
    fit::FitProblem restart = problem;
    for (auto& f : restart.free) f.initial = std::clamp(f.initial * jitter(rng), f.lower, f.upper);
    fit::FitResult r = fit::fit(restart);
    if (r.residual_norm < best.residual_norm) best = std::move(r);
  }
  emit(c, out, [&](std::ostream& os) { write_fit_report(os, best, problem); });
  return best.converged ? kOk : kNotConverged;
}

int cmd_sweep(const Overrides& o, const std::vector<std::string>& grid_flags, std::ostream& out) {
  const RunConfig base = resolve(o);
  if (o.dump_config) {
    out << dump_config(base);
    return kOk;
  }
  if (grid_flags.empty()) throw InvalidArgument("sweep needs at least one --grid KEY=v1,v2,...");
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& g : grid_flags) {
    const auto [key, values] = split_assignment(g);
    std::vector<double> vs;
    for (const auto& v : split_list({values})) vs.push_back(parse_double(v));
    if (vs.empty()) throw InvalidArgument("grid axis '" + key + "' has no values");
    axes.emplace_back(key, std::move(vs));
  }
  std::vector<RunConfig> configs{base};
  for (const auto& [key, values] : axes) {
    std::vector<RunConfig> next;
    for (const auto& cfg : configs) {
      for (double v : values) {
        RunConfig c = cfg;
        if (key == "n0") c.n0 = v;
        else if (key == "antigen_dose") c.antigen_dose = v;
        else set_param(c.params, key, v);
        validate(c.params);
        next.push_back(std::move(c));
      }
    }
    configs = std::move(next);
  }
  std::vector<ScenarioSpec> specs;
  for (const auto& c : configs) specs.push_back(resolve_scenario(c));
  const auto sims = run_all(specs, base.solver);

  std::ostringstream os;
  for (const auto& axis : axes) os << axis.first << ',';
  os << "total_at_horizon,recruitment_pct,antigen_at_horizon,profile_mode\n";
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const auto& c = configs[k];
    for (const auto& axis : axes) {
      const double v = axis.first == "n0"             ? c.n0
                       : axis.first == "antigen_dose" ? c.antigen_dose
                                                      : get_param(c.params, axis.first);
      os << format_number(v) << ',';
    }
    const auto& sim = sims[k];
    const double horizon = sim.spec().horizon;
    double mode = std::nan("");
    try {
      mode = profile_mode(division_profile(sim, horizon, 0));
    } catch (const UndefinedObservable&) {
    }
    os << format_number(sim.total(horizon)) << ','
       << format_number(recruitment_fraction(sim, 0, supplied_cells(sim.spec(), 0))) << ','
       << format_number(sim.antigen(horizon)) << ',' << format_number(mode) << '\n';
  }
  emit(base, out, [&](std::ostream& s) { s << os.str(); });
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Antigen-regulated T cell clonal expansion: simulation and parameter estimation"};
  app.require_subcommand(1);

  Overrides sim_o, rep_o, fit_o, sweep_o, syn_o;
  auto* simulate = app.add_subcommand("simulate", "Integrate one scenario and write the trajectory table");
  add_common(simulate, sim_o);
  simulate->add_option("--grid-h", sim_o.grid_h, "Output grid spacing in hours");

  auto* report = app.add_subcommand("report", "Summary observables for an experiment preset");
  add_common(report, rep_o);

  auto* fitcmd = app.add_subcommand("fit", "Fit free parameters to a dataset");
  add_common(fitcmd, fit_o);
  std::string data_path;
  std::vector<std::string> free_flags;
  std::optional<int> max_iterations, starts;
  bool central = false;
  fitcmd->add_option("--data", data_path, "Dataset file")->required();
  fitcmd->add_option("--free", free_flags, "Free parameters (comma-separated or repeated)");
  fitcmd->add_option("--max-iterations", max_iterations, "Iteration budget");
  fitcmd->add_option("--starts", starts, "Number of starts (seeded random restarts)");
  fitcmd->add_flag("--central", central, "Central-difference Jacobians");

  auto* sweep = app.add_subcommand("sweep", "Cartesian parameter grid over one scenario");
  add_common(sweep, sweep_o);
  std::vector<std::string> grid_flags;
  sweep->add_option("--grid", grid_flags, "Axis KEY=v1,v2,... (repeatable; KEY is a parameter, n0 or antigen_dose)");

  auto* synth = app.add_subcommand("synthesize", "Write a synthetic dataset simulated at the given parameters");
  add_common(synth, syn_o);
  double noise = 0.0;
  synth->add_option("--noise", noise, "Relative lognormal noise level");

  std::vector<std::string> argv_store{"clonesim"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(sim_o, out);
    if (*report) return cmd_report(rep_o, out);
    if (*fitcmd) return cmd_fit(fit_o, data_path, free_flags, max_iterations, starts, central, out);
    if (*sweep) return cmd_sweep(sweep_o, grid_flags, out);
    if (*synth) return cmd_synthesize(syn_o, noise, out);
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IntegrationError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const UndefinedObservable& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kUsage;
}

}  // namespace clonesim::cli
