#include "clonesim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "clonesim/errors.hpp"
#include "clonesim/parallel.hpp"

namespace clonesim {

namespace {

// A Gaussian supply is treated as inactive more than this many spreads
// before its peak.
constexpr double kSupplyLeadSpreads = 8.0;

ScenarioSpec competition_experiment(double labelled_tc, std::optional<double> competing_tc, double horizon,
                                    const ModelParams& params) {
  ScenarioSpec spec;
  spec.params = params;
  spec.antigen.t_k = -12.0;
  spec.cohorts.push_back({.label = "labelled", .supply = {.dose = kTransferDose, .t_c = labelled_tc}});
  if (competing_tc) {
    spec.cohorts.push_back({.label = "competing", .supply = {.dose = kTransferDose, .t_c = *competing_tc}});
  }
  spec.horizon = horizon;
  spec.observation_times = {horizon};
  return spec;
}

void check_cohort(const SimulationResult& result, int cohort) {
  if (cohort < 0 || cohort >= result.layout().cohorts()) {
    throw InvalidArgument("unknown cohort " + std::to_string(cohort));
  }
}

}  // namespace

Group parse_group(std::string_view tag) {
  if (tag == "i" || tag == "1") return Group::i;
  if (tag == "ii" || tag == "2") return Group::ii;
  if (tag == "iii" || tag == "3") return Group::iii;
  throw InvalidArgument("unknown group '" + std::string(tag) + "' (expected i, ii or iii)");
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::i: return "i";
    case Group::ii: return "ii";
    case Group::iii: return "iii";
  }
  return "?";
}

void validate(const ScenarioSpec& spec) {
  validate(spec.params);
  validate(spec.antigen);
  if (spec.cohorts.empty()) throw InvalidArgument("scenario needs at least one cohort");
  for (const auto& c : spec.cohorts) {
    validate(c.supply);
    if (!std::isfinite(c.initial_naive) || c.initial_naive < 0.0) {
      throw InvalidArgument("initial naive density must be >= 0");
    }
  }
  if (!std::isfinite(spec.initial_antigen) || spec.initial_antigen < 0.0) {
    throw InvalidArgument("initial antigen must be >= 0");
  }
  if (!std::isfinite(spec.horizon)) throw InvalidArgument("horizon must be finite");
  if (!(spec.horizon > start_time(spec))) throw InvalidArgument("horizon must lie after the integration start");
  for (double t : spec.observation_times) {
    if (!std::isfinite(t) || t > spec.horizon) throw InvalidArgument("observation time beyond horizon");
  }
}

double start_time(const ScenarioSpec& spec) {
  double t0 = std::min(0.0, spec.antigen.t_k);
  for (const auto& c : spec.cohorts) {
    if (c.supply.enabled && c.supply.dose > 0.0) {
      t0 = std::min(t0, c.supply.peak_time() - kSupplyLeadSpreads * c.supply.p);
    }
  }
  return t0;
}

double supplied_cells(const ScenarioSpec& spec, int cohort) {
  if (cohort < 0 || cohort >= static_cast<int>(spec.cohorts.size())) {
    throw InvalidArgument("unknown cohort " + std::to_string(cohort));
  }
  const auto& c = spec.cohorts[static_cast<std::size_t>(cohort)];
  return c.initial_naive + (c.supply.enabled ? c.supply.dose : 0.0);
}

ScenarioSpec build_experiment1(double n0, const ModelParams& params) {
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw InvalidArgument("experiment 1 needs n0 > 0");
  ScenarioSpec spec;
  spec.params = params;
  spec.antigen.t_k = 0.0;
  spec.cohorts.push_back({.label = "labelled", .initial_naive = n0});
  spec.horizon = 42.0 * kHoursPerDay;
  spec.observation_times = {0.0, 7.0 * kHoursPerDay, 42.0 * kHoursPerDay};
  return spec;
}

ScenarioSpec build_experiment2(Group group, const ModelParams& params) {
  std::optional<double> competing;
  if (group == Group::ii) competing = 24.0;
  if (group == Group::iii) competing = 0.0;
  return competition_experiment(24.0, competing, 3.5 * kHoursPerDay, params);
}

ScenarioSpec build_experiment3(Group group, const ModelParams& params) {
  std::optional<double> competing;
  if (group == Group::ii) competing = 48.0;
  if (group == Group::iii) competing = 0.0;
  return competition_experiment(72.0, competing, 5.5 * kHoursPerDay, params);
}

SimulationResult::SimulationResult(ScenarioSpec spec, StateLayout layout, dde::DenseTrajectory trajectory)
    : spec_(std::move(spec)), layout_(layout), trajectory_(std::move(trajectory)) {}

std::vector<double> SimulationResult::state(double t) const {
  auto y = trajectory_.evaluate(t);
  y[StateLayout::antigen()] += antigen_supply_cumulative(t, spec_.antigen);
  return y;
}

double SimulationResult::antigen(double t) const { return state(t)[StateLayout::antigen()]; }

double SimulationResult::naive(double t, int cohort) const {
  check_cohort(*this, cohort);
  return state(t)[layout_.naive(cohort)];
}

double SimulationResult::total(double t, int cohort) const { return total_t_cells(state(t), layout_, cohort); }

namespace {

// The antigen density rises steeply just after its onset, which a cubic
// interpolant straddling the onset undershoots. Without initial antigen the
// state is stationary before the onset, so the start can move back by less
// than one step to put the onset on a mesh node.
double mesh_start(const ScenarioSpec& spec, double h) {
  const double t0 = start_time(spec);
  const double onset = spec.antigen.location();
  if (spec.initial_antigen != 0.0 || spec.antigen.dose == 0.0 || !(onset > t0)) return t0;
  return onset - h * std::ceil((onset - t0) / h - 1e-9);
}

}  // namespace

SimulationResult run(const ScenarioSpec& spec, const SolverOptions& options) {
  validate(spec);
  Supplies supplies{.antigen = spec.antigen, .naive = {}};
  for (const auto& c : spec.cohorts) supplies.naive.push_back(c.supply);
  const ExpansionModel model(spec.params, std::move(supplies));
  const StateLayout& layout = model.layout();

  std::vector<double> initial(layout.size(), 0.0);
  initial[StateLayout::antigen()] = spec.initial_antigen;
  for (int c = 0; c < layout.cohorts(); ++c) initial[layout.naive(c)] = spec.cohorts[static_cast<std::size_t>(c)].initial_naive;

  const dde::DelaySet delays({spec.params.sigma, spec.params.tau});
  const dde::StepControl control{
      .max_step = options.step_h > 0.0 ? options.step_h : spec.params.tau / 16.0,
      .rel_tol = options.rel_tol,
      .verify = options.verify,
  };
  // The solver integrates B = A - F with F the closed-form cumulative antigen
  // supply, so the steep onset of the supply density never passes through
  // the step quadrature.
  const double sigma = spec.params.sigma, tau = spec.params.tau;
  const AntigenSupplySpec& antigen = model.supplies().antigen;
  std::vector<double> now(layout.size()), lag_sigma(layout.size()), lag_tau(layout.size());
  auto derivative = [&](double t, std::span<const double> y, std::span<const std::span<const double>> lagged,
                        std::span<double> dy) {
    std::copy(y.begin(), y.end(), now.begin());
    std::copy(lagged[0].begin(), lagged[0].end(), lag_sigma.begin());
    std::copy(lagged[1].begin(), lagged[1].end(), lag_tau.begin());
    now[0] += antigen_supply_cumulative(t, antigen);
    lag_sigma[0] += antigen_supply_cumulative(t - sigma, antigen);
    lag_tau[0] += antigen_supply_cumulative(t - tau, antigen);
    model(t, now, lag_sigma, lag_tau, dy);
    dy[0] -= antigen_supply_rate(t, antigen);
  };
  auto trajectory =
      dde::integrate(derivative, dde::zero_history(), initial, delays, mesh_start(spec, control.max_step),
                     spec.horizon, control);
  return SimulationResult(spec, layout, std::move(trajectory));
}

std::vector<SimulationResult> run_all(const std::vector<ScenarioSpec>& specs, const SolverOptions& options) {
  std::vector<std::optional<SimulationResult>> slots(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) { slots[i].emplace(run(specs[i], options)); });
  std::vector<SimulationResult> out;
  out.reserve(specs.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

double recruitment_fraction_at(const SimulationResult& result, double t, int cohort, double denominator) {
  if (denominator == 0.0 || !std::isfinite(denominator)) {
    throw UndefinedObservable("recruitment denominator is zero");
  }
  return (1.0 - result.naive(t, cohort) / denominator) * 100.0;
}

double recruitment_fraction(const SimulationResult& result, int cohort, double denominator) {
  return recruitment_fraction_at(result, result.spec().horizon, cohort, denominator);
}

std::vector<double> division_profile(const SimulationResult& result, double t, int cohort) {
  check_cohort(result, cohort);
  const auto y = result.state(t);
  const auto& layout = result.layout();
  const int K = layout.depth();
  std::vector<double> peaks(static_cast<std::size_t>(K));
  for (int i = 1; i <= K; ++i) {
    double v = y[layout.activated(cohort, i)];
    if (i < K) v += y[layout.transit(cohort, i)];
    peaks[static_cast<std::size_t>(i - 1)] = std::max(v, 0.0);
  }
  const double divided = std::accumulate(peaks.begin(), peaks.end(), 0.0);
  if (!(divided > 0.0)) throw UndefinedObservable("no divided cells at t=" + std::to_string(t));
  for (double& v : peaks) v = 100.0 * v / divided;
  return peaks;
}

int profile_mode(const std::vector<double>& profile) {
  if (profile.empty()) throw UndefinedObservable("empty division profile");
  return static_cast<int>(std::max_element(profile.begin(), profile.end()) - profile.begin()) + 1;
}

int profile_support(const std::vector<double>& profile, double threshold) {
  for (int i = static_cast<int>(profile.size()); i >= 1; --i) {
    if (profile[static_cast<std::size_t>(i - 1)] >= threshold) return i;
  }
  return 0;
}

double fold_difference(const std::map<double, SimulationResult>& arms, double t) {
  if (arms.size() < 2) throw InvalidArgument("fold difference needs at least two arms");
  const double smallest = arms.begin()->second.total(t);
  const double largest = arms.rbegin()->second.total(t);
  if (smallest == 0.0) throw UndefinedObservable("smallest arm has zero T cells");
  return largest / smallest;
}

Regression recruitment_regression(const std::vector<std::pair<double, double>>& arms) {
  if (arms.size() < 3) throw InvalidArgument("regression needs at least three arms");
  std::vector<double> x, y;
  for (const auto& [dose, pct] : arms) {
    if (!(dose > 0.0)) throw InvalidArgument("regression doses must be positive");
    x.push_back(std::log10(dose));
    y.push_back(pct);
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw UndefinedObservable("degenerate regression abscissae");
  Regression r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return r;
}

std::vector<double> cohort_activated_totals(const SimulationResult& result, double t) {
  const auto y = result.state(t);
  std::vector<double> out;
  for (int c = 0; c < result.layout().cohorts(); ++c) out.push_back(activated_t_cells(y, result.layout(), c));
  return out;
}

}  // namespace clonesim
