#include "clonesim/fit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <utility>

#include <boost/math/distributions/students_t.hpp>

#include "clonesim/errors.hpp"
#include "clonesim/parallel.hpp"

namespace clonesim::fit {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string scenario_key(const Record& r) { return std::to_string(r.experiment) + "|" + r.arm; }

double cost_of(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const std::vector<FreeParameter>& free) {
  Eigen::VectorXd out = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto& f = free[static_cast<std::size_t>(i)];
    out[i] = std::clamp(x[i], f.lower, f.upper);
  }
  return out;
}

double model_observable(const Record& rec, const SimulationResult& sim) {
  switch (rec.kind) {
    case ObservableKind::log_count: {
      const double total = sim.total(rec.time, 0);
      if (!(total > 0.0)) throw UndefinedObservable("nonpositive count for log-count record");
      return std::log10(total);
    }
    case ObservableKind::recruitment:
      return recruitment_fraction_at(sim, rec.time, 0, supplied_cells(sim.spec(), 0));
    case ObservableKind::profile: {
      const auto profile = division_profile(sim, rec.time, 0);
      return profile.at(static_cast<std::size_t>(rec.division - 1));
    }
  }
  return 0.0;
}

}  // namespace

ObservableKind parse_kind(std::string_view tag) {
  if (tag == "log_count" || tag == "log-count") return ObservableKind::log_count;
  if (tag == "recruitment") return ObservableKind::recruitment;
  if (tag == "profile") return ObservableKind::profile;
  throw InvalidArgument("unknown observable kind '" + std::string(tag) + "'");
}

std::string_view to_string(ObservableKind kind) {
  switch (kind) {
    case ObservableKind::log_count: return "log_count";
    case ObservableKind::recruitment: return "recruitment";
    case ObservableKind::profile: return "profile";
  }
  return "?";
}

ScenarioSpec scenario_for(int experiment, std::string_view arm, const ModelParams& params) {
  switch (experiment) {
    case 1: {
      double n0 = 0.0;
      const auto [ptr, ec] = std::from_chars(arm.data(), arm.data() + arm.size(), n0);
      if (ec != std::errc() || ptr != arm.data() + arm.size()) {
        throw InvalidArgument("experiment 1 arm must be a precursor density, got '" + std::string(arm) + "'");
      }
      return build_experiment1(n0, params);
    }
    case 2: return build_experiment2(parse_group(arm), params);
    case 3: return build_experiment3(parse_group(arm), params);
    default: throw InvalidArgument("unknown experiment " + std::to_string(experiment));
  }
}

void validate(const DataSet& data) {
  for (const auto& r : data.records) {
    if (!(r.weight > 0.0) || !std::isfinite(r.weight)) throw InvalidArgument("record weights must be positive");
    if (!std::isfinite(r.value) || !std::isfinite(r.time)) throw InvalidArgument("record values must be finite");
    const ScenarioSpec spec = scenario_for(r.experiment, r.arm, ModelParams{});
    if (r.time > spec.horizon || r.time < start_time(spec)) {
      throw InvalidArgument("record time outside the experiment span");
    }
    if (r.kind == ObservableKind::profile && (r.division < 1 || r.division > spec.params.K)) {
      throw InvalidArgument("profile record needs a division in [1, K]");
    }
  }
}

FreeParameter default_bounds(std::string_view name, const ModelParams& base) {
  const auto& names = fittable_param_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw InvalidArgument("parameter '" + std::string(name) + "' cannot be fitted");
  }
  const double reference = get_param(ModelParams{}, name);
  FreeParameter f{.name = std::string(name), .lower = 1e-6, .upper = 10.0 * reference,
                  .initial = get_param(base, name)};
  if (name == "g") f.upper = std::min(f.upper, (1.0 - 1e-6) / base.M);
  return f;
}

FitProblem make_problem(DataSet data, const std::vector<std::string>& names, const ModelParams& base) {
  FitProblem problem;
  problem.fixed = base;
  problem.data = std::move(data);
  for (const auto& n : names) problem.free.push_back(default_bounds(n, base));
  return problem;
}

void validate(const FitProblem& problem) {
  validate(problem.fixed);
  validate(problem.data);
  for (std::size_t i = 0; i < problem.free.size(); ++i) {
    const auto& f = problem.free[i];
    default_bounds(f.name, problem.fixed);
    if (!(f.lower < f.upper)) throw InvalidArgument("bounds for '" + f.name + "' must satisfy lower < upper");
    if (f.initial < f.lower || f.initial > f.upper) {
      throw InvalidArgument("initial guess for '" + f.name + "' lies outside its bounds");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (problem.free[j].name == f.name) throw InvalidArgument("parameter '" + f.name + "' freed twice");
    }
  }
  if (!(problem.control.level >= 0.0 && problem.control.level < 1.0)) {
    throw InvalidArgument("confidence level must lie in [0, 1)");
  }
}

ModelParams apply(const FitProblem& problem, const Eigen::VectorXd& candidate) {
  if (candidate.size() != static_cast<Eigen::Index>(problem.free.size())) {
    throw InvalidArgument("candidate size does not match the free parameter count");
  }
  ModelParams p = problem.fixed;
  for (std::size_t i = 0; i < problem.free.size(); ++i) {
    set_param(p, problem.free[i].name, candidate[static_cast<Eigen::Index>(i)]);
  }
  return p;
}

ResidualEvaluation residuals(const Eigen::VectorXd& candidate, const FitProblem& problem) {
  const ModelParams params = apply(problem, candidate);
  const auto& records = problem.data.records;

  // One simulation per (experiment, arm), numbered by first appearance.
  std::map<std::string, std::size_t> slot_of;
  std::vector<const Record*> representative;
  std::vector<std::size_t> record_slot(records.size());
  std::map<std::pair<int, ObservableKind>, double> block_size;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto [it, inserted] = slot_of.emplace(scenario_key(records[i]), representative.size());
    if (inserted) representative.push_back(&records[i]);
    record_slot[i] = it->second;
    block_size[{records[i].experiment, records[i].kind}] += 1.0;
  }

  std::vector<std::optional<SimulationResult>> sims(representative.size());
  std::vector<char> failed(representative.size(), 0);
  parallel_for(representative.size(), [&](std::size_t s) {
    try {
      const Record& r = *representative[s];
      sims[s].emplace(run(scenario_for(r.experiment, r.arm, params), problem.control.solver));
    } catch (const IntegrationError&) {
      failed[s] = 1;
    } catch (const InvalidArgument&) {
      failed[s] = 1;
    }
  });

  ResidualEvaluation out;
  out.values.resize(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    const double scale =
        r.weight * (problem.control.balance_blocks ? 1.0 / std::sqrt(block_size[{r.experiment, r.kind}]) : 1.0);
    double value = kFailurePenalty;
    if (!failed[record_slot[i]]) {
      try {
        value = scale * (model_observable(r, *sims[record_slot[i]]) - r.value);
      } catch (const UndefinedObservable&) {
        out.solver_failed = true;
      }
    } else {
      out.solver_failed = true;
    }
    out.values[static_cast<Eigen::Index>(i)] = value;
  }
  return out;
}

Eigen::MatrixXd jacobian(const Eigen::VectorXd& candidate, const FitProblem& problem,
                         const Eigen::VectorXd* at_candidate) {
  const Eigen::VectorXd base = at_candidate ? *at_candidate : residuals(candidate, problem).values;
  Eigen::MatrixXd J(base.size(), candidate.size());
  for (Eigen::Index j = 0; j < candidate.size(); ++j) {
    const auto& f = problem.free[static_cast<std::size_t>(j)];
    const double h = 1e-6 * (1.0 + std::abs(candidate[j]));
    if (problem.control.central_differences && candidate[j] - h >= f.lower && candidate[j] + h <= f.upper) {
      Eigen::VectorXd up = candidate, down = candidate;
      up[j] += h;
      down[j] -= h;
      J.col(j) = (residuals(up, problem).values - residuals(down, problem).values) / (2.0 * h);
    } else {
      const double step = candidate[j] + h <= f.upper ? h : -h;
      Eigen::VectorXd moved = candidate;
      moved[j] += step;
      J.col(j) = (residuals(moved, problem).values - base) / step;
    }
  }
  return J;
}

std::vector<Interval> confidence_intervals(const FitResult& result, double level) {
  if (!(level >= 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in [0, 1)");
  const auto p = static_cast<std::size_t>(result.estimates.size());
  std::vector<Interval> out(p);
  const double inf = std::numeric_limits<double>::infinity();
  if (p == 0) return out;
  for (std::size_t i = 0; i < p; ++i) {
    const double x = result.estimates[static_cast<Eigen::Index>(i)];
    out[i] = {x, x, true};
  }
  if (level == 0.0) return out;

  const std::size_t m = result.record_count;
  const Eigen::MatrixXd& J = result.jacobian;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
  qr.setThreshold(1e-12);
  if (m <= p || qr.rank() < static_cast<Eigen::Index>(p)) {
    for (std::size_t i = 0; i < p; ++i) out[i] = {-inf, inf, false};
    return out;
  }
  const double dof = static_cast<double>(m - p);
  const double variance = result.residuals.squaredNorm() / dof;
  const Eigen::MatrixXd cov = variance * (J.transpose() * J).inverse();
  const boost::math::students_t dist(dof);
  const double q = boost::math::quantile(dist, 0.5 * (1.0 + level));
  for (std::size_t i = 0; i < p; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double half = q * std::sqrt(std::max(cov(k, k), 0.0));
    out[i] = {result.estimates[k] - half, result.estimates[k] + half, std::isfinite(half)};
  }
  return out;
}

FitResult fit(const FitProblem& problem) {
  validate(problem);
  const auto p = static_cast<Eigen::Index>(problem.free.size());
  const auto& free = problem.free;
  const auto& ctl = problem.control;

  FitResult res;
  res.level = ctl.level;
  res.record_count = problem.data.records.size();
  for (const auto& f : free) res.names.push_back(f.name);
  res.initial.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) res.initial[i] = free[static_cast<std::size_t>(i)].initial;

  Eigen::VectorXd x = clamp_to(res.initial, free);
  ResidualEvaluation eval = residuals(x, problem);
  Eigen::VectorXd r = eval.values;
  double cost = cost_of(r);
  res.initial_residual_norm = r.norm();

  if (p == 0) {
    res.estimates = x;
    res.params = problem.fixed;
    res.residuals = r;
    res.residual_norm = r.norm();
    res.jacobian = Eigen::MatrixXd(r.size(), 0);
    res.converged = true;
    res.solver_failed = eval.solver_failed;
    res.message = "no free parameters";
    return res;
  }

  Eigen::MatrixXd J = jacobian(x, problem, &r);
  // Dimensionless: the damping term is scaled by diag(J^T J).
  double lambda = 1e-3;
  double nu = 2.0;
  bool jacobian_current = true;

  for (int iter = 1; iter <= ctl.max_iterations; ++iter) {
    res.iterations = iter;
    if (!jacobian_current) {
      J = jacobian(x, problem, &r);
      jacobian_current = true;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd grad = J.transpose() * r;
    const double rnorm = r.norm();

    // Variables pinned at a bound by the gradient stay fixed this iteration.
    std::vector<Eigen::Index> active;
    double worst_cosine = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto& f = free[static_cast<std::size_t>(i)];
      const bool pinned = (x[i] <= f.lower && grad[i] > 0.0) || (x[i] >= f.upper && grad[i] < 0.0);
      if (pinned) continue;
      active.push_back(i);
      const double cn = J.col(i).norm();
      if (cn > 0.0 && rnorm > 0.0) worst_cosine = std::max(worst_cosine, std::abs(grad[i]) / (cn * rnorm));
    }
    if (rnorm == 0.0 || active.empty() || worst_cosine <= ctl.gtol) {
      res.converged = true;
      res.message = rnorm == 0.0 ? "zero residual" : "gradient below tolerance";
      res.log.push_back({iter, cost, lambda, false});
      break;
    }

    const auto na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd A(na, na);
    Eigen::VectorXd b(na);
    for (Eigen::Index a = 0; a < na; ++a) {
      b[a] = -grad[active[a]];
      for (Eigen::Index c = 0; c < na; ++c) A(a, c) = JtJ(active[a], active[c]);
      A(a, a) += lambda * std::max(JtJ(active[a], active[a]), 1e-300);
    }
    const Eigen::VectorXd delta_active = A.ldlt().solve(b);
    Eigen::VectorXd trial = x;
    for (Eigen::Index a = 0; a < na; ++a) trial[active[a]] += delta_active[a];
    trial = clamp_to(trial, free);
    const Eigen::VectorXd step = trial - x;

    bool small_step = true;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::abs(step[i]) > ctl.xtol * (std::abs(x[i]) + ctl.xtol)) small_step = false;
    }
    if (small_step) {
      res.converged = true;
      res.message = "step below tolerance";
      res.log.push_back({iter, cost, lambda, false});
      break;
    }

    const ResidualEvaluation trial_eval = residuals(trial, problem);
    const double trial_cost = cost_of(trial_eval.values);
    const double predicted = -(grad.dot(step) + 0.5 * step.dot(JtJ * step));
    const double actual = cost - trial_cost;
    const double rho = predicted > 0.0 ? actual / predicted : -1.0;
    const bool accept = rho > 1e-4 && !trial_eval.solver_failed;
    res.log.push_back({iter, trial_cost, lambda, accept});

    if (accept) {
      x = trial;
      r = trial_eval.values;
      eval = trial_eval;
      const double previous = cost;
      cost = trial_cost;
      jacobian_current = false;
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (actual <= ctl.ftol * previous) {
        res.converged = true;
        res.message = "relative cost reduction below tolerance";
        break;
      }
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e20) {
        res.converged = true;
        res.message = "no further reduction possible";
        break;
      }
    }
  }
  if (!res.converged) res.message = "iteration budget exhausted";

  if (!jacobian_current) J = jacobian(x, problem, &r);
  res.estimates = x;
  res.params = apply(problem, x);
  res.residuals = r;
  res.residual_norm = r.norm();
  res.jacobian = J;
  res.solver_failed = eval.solver_failed;
  res.intervals = confidence_intervals(res, ctl.level);
  return res;
}

DataSet synthesize_data(const ModelParams& params, double noise, std::uint64_t seed, const SolverOptions& solver) {
  validate(params);
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("noise must be >= 0");

  std::vector<std::pair<int, std::string>> arms;
  for (double n0 : kExperiment1Arms) arms.emplace_back(1, shortest(n0));
  for (int e : {2, 3}) {
    for (Group g : {Group::i, Group::ii, Group::iii}) arms.emplace_back(e, std::string(to_string(g)));
  }
  std::vector<ScenarioSpec> specs;
  for (const auto& [e, arm] : arms) specs.push_back(scenario_for(e, arm, params));
  const auto sims = run_all(specs, solver);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto jitter = [&](double v) { return noise > 0.0 ? v * std::exp(noise * normal(rng)) : v; };
  // Weights put every residual on the scale of a relative deviation, which
  // is what the multiplicative noise perturbs.
  auto relative_weight = [](double v) { return 1.0 / std::abs(v); };
  const double log_weight = std::log(10.0);

  DataSet data;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const auto& [e, arm] = arms[a];
    const auto& sim = sims[a];
    if (e == 1) {
      for (double t : sim.spec().observation_times) {
        data.records.push_back({.experiment = 1, .arm = arm, .kind = ObservableKind::log_count, .time = t,
                                .value = std::log10(jitter(sim.total(t, 0))), .weight = log_weight});
      }
      continue;
    }
    const double t = sim.spec().horizon;
    const double recruited = recruitment_fraction(sim, 0, supplied_cells(sim.spec(), 0));
    data.records.push_back({.experiment = e, .arm = arm, .kind = ObservableKind::recruitment, .time = t,
                            .value = jitter(recruited), .weight = relative_weight(recruited)});
    const auto profile = division_profile(sim, t, 0);
    for (int i = 1; i <= kProfileDivisions; ++i) {
      const double share = profile[static_cast<std::size_t>(i - 1)];
      if (share < kMinProfilePercent) continue;
      data.records.push_back({.experiment = e, .arm = arm, .kind = ObservableKind::profile, .time = t,
                              .division = i, .value = jitter(share), .weight = relative_weight(share)});
    }
  }
  return data;
}

}  // namespace clonesim::fit
