#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clonesim/dde.hpp"
#include "clonesim/kernel.hpp"
#include "clonesim/params.hpp"
#include "clonesim/supply.hpp"

namespace clonesim {

enum class Group { i, ii, iii };

Group parse_group(std::string_view tag);
std::string_view to_string(Group g);

struct CohortSpec {
  std::string label;
  NaiveSupplySpec supply{.enabled = false};
  double initial_naive = 0.0;  // N at the integration start

  friend bool operator==(const CohortSpec&, const CohortSpec&) = default;
};

/// One experiment arm. Cohort 0 is the tracked (labelled) population.
struct ScenarioSpec {
  std::vector<CohortSpec> cohorts;
  AntigenSupplySpec antigen;
  double initial_antigen = 0.0;
  double horizon = 0.0;
  std::vector<double> observation_times;
  ModelParams params;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

void validate(const ScenarioSpec& spec);

/// Integration start: min(0, t_k, earliest cohort supply activity), so an
/// antigen injection before t = 0 is captured with zero state before it.
double start_time(const ScenarioSpec& spec);

/// Cells the cohort receives in total: initial N plus the supplied dose.
double supplied_cells(const ScenarioSpec& spec, int cohort);

// Experiment presets. Doses are in cells per 10^5 leukocytes.
inline constexpr std::array<double, 4> kExperiment1Arms{0.1, 1.3, 8.5, 94.7};
inline constexpr double kTransferDose = 17.0;
inline constexpr double kHoursPerDay = 24.0;

/// Varying precursor numbers: N(0) = n0, no further supply, antigen at t = 0,
/// followed to day 42.
ScenarioSpec build_experiment1(double n0, const ModelParams& params = {});
/// Labelled cohort at t_c = 24 h, competing cohort absent / at 24 h / at 0 h,
/// antigen at t_k = -12 h, followed to day 3.5.
ScenarioSpec build_experiment2(Group group, const ModelParams& params = {});
/// Labelled cohort at t_c = 72 h, competing cohort absent / at 48 h / at 0 h,
/// antigen at t_k = -12 h, followed to day 5.5.
ScenarioSpec build_experiment3(Group group, const ModelParams& params = {});

struct SolverOptions {
  double step_h = 0.0;  // 0 selects tau / 16
  double rel_tol = 1e-4;
  bool verify = false;
};

class SimulationResult {
 public:
  SimulationResult(ScenarioSpec spec, StateLayout layout, dde::DenseTrajectory trajectory);

  const ScenarioSpec& spec() const { return spec_; }
  const StateLayout& layout() const { return layout_; }
  /// Raw solver output. Slot 0 holds A(t) minus the cumulative antigen
  /// supply; state() adds the supply back.
  const dde::DenseTrajectory& trajectory() const { return trajectory_; }

  std::vector<double> state(double t) const;
  double antigen(double t) const;
  double naive(double t, int cohort) const;
  double total(double t, int cohort = kAllCohorts) const;

 private:
  ScenarioSpec spec_;
  StateLayout layout_;
  dde::DenseTrajectory trajectory_;
};

/// Integrates the model with zero history from start_time(spec) to the
/// horizon. Solver errors propagate as IntegrationError.
SimulationResult run(const ScenarioSpec& spec, const SolverOptions& options = {});

/// Runs independent scenarios on the worker pool; output order follows input.
std::vector<SimulationResult> run_all(const std::vector<ScenarioSpec>& specs, const SolverOptions& options = {});

/// (1 - N(t) / denominator) * 100 at t (default: the horizon).
double recruitment_fraction(const SimulationResult& result, int cohort, double denominator);
double recruitment_fraction_at(const SimulationResult& result, double t, int cohort, double denominator);

/// Percentage of divided cells in each division peak. Entry i-1 holds peak i:
/// 100 (T[i] + D[i]) / sum_j (T[j] + D[j]). Undivided cells (N, D_N) are
/// excluded. Throws UndefinedObservable when no divided cells exist.
std::vector<double> division_profile(const SimulationResult& result, double t, int cohort);

/// 1-based division with the largest profile entry.
int profile_mode(const std::vector<double>& profile);
/// Highest 1-based division whose entry is at least `threshold` percent.
int profile_support(const std::vector<double>& profile, double threshold = 1.0);

/// Total T cells of the largest-dose arm over the smallest-dose arm at t.
double fold_difference(const std::map<double, SimulationResult>& arms, double t);

struct Regression {
  double slope = 0.0;  // percentage points per log10 dose
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of recruitment % against log10(dose), one
/// (dose, recruitment %) point per arm.
Regression recruitment_regression(const std::vector<std::pair<double, double>>& arms);

/// Activated (non-naive) T cells per cohort at t.
std::vector<double> cohort_activated_totals(const SimulationResult& result, double t);

}  // namespace clonesim
