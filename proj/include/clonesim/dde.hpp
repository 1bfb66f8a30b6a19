#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace clonesim::dde {

/// Strictly positive, distinct constant lags.
class DelaySet {
 public:
  explicit DelaySet(std::vector<double> lags);

  std::span<const double> lags() const { return lags_; }
  std::size_t size() const { return lags_.size(); }
  double shortest() const;

 private:
  std::vector<double> lags_;
};

struct StepControl {
  double max_step = 0.25;  // hours; must not exceed the shortest delay
  double rel_tol = 1e-4;   // Richardson acceptance threshold
  bool verify = false;     // re-solve at half step and enforce rel_tol
};

/// State for t < t0, written into `out`.
using History = std::function<void(double t, std::span<double> out)>;

/// Derivative at t given the current state and one delayed state per lag
/// (in DelaySet order).
using DelayRhs = std::function<void(double t, std::span<const double> y,
                                    std::span<const std::span<const double>> lagged, std::span<double> dy)>;

/// Zero history of any dimension.
History zero_history();

/// Continuous solution on a mesh t0, t0 + h, t0 + 2h, ..., t1 (the last
/// step may be shorter) with cubic Hermite interpolation between nodes.
class DenseTrajectory {
 public:
  DenseTrajectory(History history, std::size_t dimension, double t0, double step);

  double t0() const { return t0_; }
  double t1() const { return mesh(nodes() - 1); }
  double step() const { return step_; }
  std::size_t dimension() const { return dim_; }
  std::size_t nodes() const { return states_.size() / dim_; }

  double mesh(std::size_t node) const {
    return node + 1 == nodes() && end_ > t0_ ? end_ : t0_ + step_ * static_cast<double>(node);
  }
  std::span<const double> state_at(std::size_t node) const { return {states_.data() + node * dim_, dim_}; }
  std::span<const double> derivative_at(std::size_t node) const { return {derivs_.data() + node * dim_, dim_}; }

  /// Throws InvalidArgument for t beyond the last accepted node.
  void evaluate(double t, std::span<double> out) const;
  std::vector<double> evaluate(double t) const;

  /// Max-norm discrepancy against a half-step re-solve, if one was made;
  /// negative otherwise.
  double richardson_error() const { return richardson_error_; }

 private:
  friend struct TrajectoryBuilder;

  void append(std::span<const double> state);
  void set_derivative(std::size_t node, std::span<const double> deriv);

  History history_;
  std::size_t dim_;
  double t0_;
  double step_;
  double end_;  // set once the final node is stored
  std::vector<double> states_;
  std::vector<double> derivs_;
  double richardson_error_ = -1.0;
};

/// Method of steps with classical RK4 on [t0, t1] with step
/// h = control.max_step; the final step is shortened to land on t1, so the
/// solution depends continuously on h.
/// Delayed lookups at or after t0 read the dense output of already accepted
/// steps; earlier lookups read `history`. `initial` is the state at t0.
///
/// Throws InvalidArgument for an inverted span or max_step above the
/// shortest delay, IntegrationError for a nonfinite state or a failed
/// Richardson verification.
DenseTrajectory integrate(const DelayRhs& rhs, const History& history, std::span<const double> initial,
                          const DelaySet& delays, double t0, double t1, const StepControl& control);

/// max over `times` of ||a(t) - b(t)||_inf / max(1, ||b(t)||_inf).
double max_relative_discrepancy(const DenseTrajectory& a, const DenseTrajectory& b, std::span<const double> times);

}  // namespace clonesim::dde
