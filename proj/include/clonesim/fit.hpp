#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "clonesim/params.hpp"
#include "clonesim/scenarios.hpp"

namespace clonesim::fit {

enum class ObservableKind { log_count, recruitment, profile };

ObservableKind parse_kind(std::string_view tag);
std::string_view to_string(ObservableKind kind);

/// One measured value. `arm` is the precursor density for experiment 1
/// ("8.5") and the group tag for experiments 2 and 3 ("ii"). `division` is
/// used by profile records only.
struct Record {
  int experiment = 1;
  std::string arm;
  ObservableKind kind = ObservableKind::log_count;
  double time = 0.0;
  int division = 0;
  double value = 0.0;
  double weight = 1.0;

  friend bool operator==(const Record&, const Record&) = default;
};

struct DataSet {
  std::vector<Record> records;
  friend bool operator==(const DataSet&, const DataSet&) = default;
};

void validate(const DataSet& data);

/// The scenario a record refers to.
ScenarioSpec scenario_for(int experiment, std::string_view arm, const ModelParams& params);

struct FreeParameter {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double initial = 0.0;
};

/// [1e-6, 10 x default]; g additionally kept below 1/M.
FreeParameter default_bounds(std::string_view name, const ModelParams& base);

struct FitControl {
  int max_iterations = 60;
  double ftol = 1e-12;  // relative cost reduction
  double xtol = 1e-10;  // relative step
  double gtol = 1e-10;  // cosine between residual and Jacobian columns
  bool central_differences = false;
  /// Scale each (experiment, observable kind) block by 1/sqrt(record count)
  /// so every block contributes comparably to the objective.
  bool balance_blocks = true;
  double level = 0.95;
  SolverOptions solver;
};

struct FitProblem {
  std::vector<FreeParameter> free;
  ModelParams fixed;  // values for every parameter not in `free`
  DataSet data;
  FitControl control;
};

/// Problem freeing `names` with default bounds, starting at `base`.
FitProblem make_problem(DataSet data, const std::vector<std::string>& names, const ModelParams& base = {});

void validate(const FitProblem& problem);

/// `fixed` with the free entries replaced by `candidate`.
ModelParams apply(const FitProblem& problem, const Eigen::VectorXd& candidate);

struct ResidualEvaluation {
  Eigen::VectorXd values;
  bool solver_failed = false;
};

/// Residual that replaces every record of a scenario the solver could not
/// integrate.
inline constexpr double kFailurePenalty = 1e6;

/// weight * block scale * (model observable - datum) per record, in record
/// order. Log-count records compare log10 of the labelled cohort's total.
ResidualEvaluation residuals(const Eigen::VectorXd& candidate, const FitProblem& problem);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool bounded = true;
};

struct IterationLog {
  int iteration = 0;
  double cost = 0.0;  // 0.5 * ||r||^2
  double lambda = 0.0;
  bool accepted = false;
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd estimates;
  Eigen::VectorXd initial;
  ModelParams params;
  Eigen::VectorXd residuals;
  double residual_norm = 0.0;
  double initial_residual_norm = 0.0;
  Eigen::MatrixXd jacobian;
  std::vector<Interval> intervals;
  double level = 0.95;
  std::size_t record_count = 0;
  int iterations = 0;
  bool converged = false;
  bool solver_failed = false;
  std::string message;
  std::vector<IterationLog> log;
};

/// Forward (or central) differences with step 1e-6 (1 + |theta|), stepping
/// inward at an upper bound.
Eigen::MatrixXd jacobian(const Eigen::VectorXd& candidate, const FitProblem& problem,
                         const Eigen::VectorXd* at_candidate = nullptr);

/// Bounded Levenberg-Marquardt: a trust-region least-squares iteration with
/// Marquardt scaling, projection onto the box and an active-set solve.
/// Non-convergence is reported in the result, not thrown.
FitResult fit(const FitProblem& problem);

/// Linearized intervals estimate +/- t_{(1+level)/2, m-p} sqrt(diag(s^2 (J^T J)^-1))
/// with s^2 = ||r||^2 / (m - p). Rank deficiency or m <= p gives unbounded
/// intervals.
std::vector<Interval> confidence_intervals(const FitResult& result, double level);

/// Division peaks 1..kProfileDivisions holding at least kMinProfilePercent
/// are recorded for each profile.
inline constexpr int kProfileDivisions = 8;
inline constexpr double kMinProfilePercent = 0.5;

/// Every experiment arm simulated at `params`: experiment-1 log-counts at
/// days 0/7/42, experiment-2/3 recruitment and division profiles at the
/// horizon. Each value is multiplied by exp(noise * Z), Z standard normal
/// drawn from a generator seeded with `seed` (counts before the log).
/// Weights are ln(10) for log-counts and 1/|noise-free value| otherwise, so
/// weighted residuals share the scale of the noise; fit such data with
/// balance_blocks off.
DataSet synthesize_data(const ModelParams& params, double noise, std::uint64_t seed,
                        const SolverOptions& solver = {});

}  // namespace clonesim::fit
