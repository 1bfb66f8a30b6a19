#include "clonesim/dde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clonesim/errors.hpp"

namespace clonesim::dde {

DelaySet::DelaySet(std::vector<double> lags) : lags_(std::move(lags)) {
  if (lags_.empty()) throw InvalidArgument("delay set is empty");
  for (std::size_t i = 0; i < lags_.size(); ++i) {
    if (!(lags_[i] > 0.0) || !std::isfinite(lags_[i])) throw InvalidArgument("delays must be positive and finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (lags_[i] == lags_[j]) throw InvalidArgument("delays must be distinct");
    }
  }
}

double DelaySet::shortest() const { return *std::min_element(lags_.begin(), lags_.end()); }

History zero_history() {
  return [](double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
}

DenseTrajectory::DenseTrajectory(History history, std::size_t dimension, double t0, double step)
    : history_(std::move(history)), dim_(dimension), t0_(t0), step_(step), end_(t0) {}

void DenseTrajectory::append(std::span<const double> state) {
  states_.insert(states_.end(), state.begin(), state.end());
  derivs_.resize(states_.size(), 0.0);
}

void DenseTrajectory::set_derivative(std::size_t node, std::span<const double> deriv) {
  std::copy(deriv.begin(), deriv.end(), derivs_.begin() + static_cast<std::ptrdiff_t>(node * dim_));
}

void DenseTrajectory::evaluate(double t, std::span<double> out) const {
  if (t < t0_) {
    history_(t, out);
    return;
  }
  const std::size_t last = nodes() - 1;
  const double t_end = mesh(last);
  if (t > t_end + 1e-12 * std::max(1.0, std::abs(t_end))) {
    throw InvalidArgument("trajectory queried at t=" + std::to_string(t) + " beyond t1=" + std::to_string(t_end));
  }
  std::size_t k = std::min(static_cast<std::size_t>((t - t0_) / step_), last);
  // floor() may land one node off near mesh points
  while (k > 0 && t < mesh(k)) --k;
  while (k < last && t >= mesh(k + 1)) ++k;
  const double ta = mesh(k);
  if (t == ta || k == last) {
    const auto y = state_at(k);
    std::copy(y.begin(), y.end(), out.begin());
    return;
  }
  const double h = mesh(k + 1) - ta;
  const double s = (t - ta) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  const double* ya = states_.data() + k * dim_;
  const double* yb = ya + dim_;
  const double* fa = derivs_.data() + k * dim_;
  const double* fb = fa + dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    out[i] = h00 * ya[i] + h * h10 * fa[i] + h01 * yb[i] + h * h11 * fb[i];
  }
}

std::vector<double> DenseTrajectory::evaluate(double t) const {
  std::vector<double> out(dim_);
  evaluate(t, out);
  return out;
}

// Write access to a trajectory under construction.
struct TrajectoryBuilder {
  static void append(DenseTrajectory& t, std::span<const double> y) { t.append(y); }
  static void set_derivative(DenseTrajectory& t, std::size_t node, std::span<const double> f) {
    t.set_derivative(node, f);
  }
  static void finish(DenseTrajectory& t, double t1) { t.end_ = t1; }
  static void set_richardson_error(DenseTrajectory& t, double e) { t.richardson_error_ = e; }
};

namespace {

DenseTrajectory solve(const DelayRhs& rhs, const History& history, std::span<const double> initial,
                      const DelaySet& delays, double t0, double t1, double max_step) {
  const std::size_t n = initial.size();
  const auto steps = std::max<std::size_t>(static_cast<std::size_t>(std::ceil((t1 - t0) / max_step - 1e-9)), 1);

  DenseTrajectory traj(history, n, t0, max_step);
  TrajectoryBuilder::append(traj, initial);

  const std::size_t m = delays.size();
  std::vector<std::vector<double>> lag_buf(m, std::vector<double>(n));
  std::vector<std::span<const double>> lag_views(lag_buf.begin(), lag_buf.end());
  std::vector<double> y(initial.begin(), initial.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

  // Stage evaluation; `front` is the start of the current step, the latest
  // time at which dense output exists.
  auto eval = [&](double t, std::span<const double> state, std::span<double> out, double front) {
    for (std::size_t j = 0; j < m; ++j) {
      const double tl = t - delays.lags()[j];
      if (tl > front + 1e-9 * std::max(1.0, std::abs(front))) {
        throw IntegrationError("delayed lookup at t=" + std::to_string(tl) + " ahead of solver front " +
                               std::to_string(front));
      }
      traj.evaluate(std::min(tl, front), lag_buf[j]);
    }
    rhs(t, state, lag_views, out);
    for (double v : out) {
      if (!std::isfinite(v)) throw IntegrationError("nonfinite derivative at t=" + std::to_string(t));
    }
  };

  eval(t0, y, k1, t0);
  TrajectoryBuilder::set_derivative(traj, 0, k1);
  for (std::size_t step = 0; step < steps; ++step) {
    const double t = traj.mesh(step);
    const bool last_step = step + 1 == steps;
    const double h = last_step ? t1 - t : max_step;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    eval(t + 0.5 * h, tmp, k2, t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    eval(t + 0.5 * h, tmp, k3, t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    eval(t + h, tmp, k4, t);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(y[i])) throw IntegrationError("nonfinite state at t=" + std::to_string(t + h));
    }
    TrajectoryBuilder::append(traj, y);
    if (last_step) TrajectoryBuilder::finish(traj, t1);
    // k1 of the next step doubles as the node derivative for dense output.
    const double t_next = traj.mesh(step + 1);
    eval(t_next, y, k1, t_next);
    TrajectoryBuilder::set_derivative(traj, step + 1, k1);
  }
  return traj;
}

}  // namespace

DenseTrajectory integrate(const DelayRhs& rhs, const History& history, std::span<const double> initial,
                          const DelaySet& delays, double t0, double t1, const StepControl& control) {
  if (!(t1 > t0)) throw InvalidArgument("integration span inverted or empty");
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw InvalidArgument("integration span must be finite");
  if (!(control.max_step > 0.0)) throw InvalidArgument("max step must be positive");
  if (control.max_step > delays.shortest()) {
    throw InvalidArgument("max step " + std::to_string(control.max_step) + " exceeds shortest delay " +
                          std::to_string(delays.shortest()));
  }
  for (double v : initial) {
    if (!std::isfinite(v)) throw IntegrationError("nonfinite initial state");
  }
  DenseTrajectory coarse = solve(rhs, history, initial, delays, t0, t1, control.max_step);
  if (control.verify) {
    const DenseTrajectory fine = solve(rhs, history, initial, delays, t0, t1, 0.5 * control.max_step);
    std::vector<double> times(coarse.nodes());
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = coarse.mesh(k);
    const double discrepancy = max_relative_discrepancy(coarse, fine, times);
    TrajectoryBuilder::set_richardson_error(coarse, discrepancy);
    if (discrepancy >= control.rel_tol) {
      throw IntegrationError("Richardson check failed: discrepancy " + std::to_string(discrepancy) +
                             " >= " + std::to_string(control.rel_tol));
    }
  }
  return coarse;
}

double max_relative_discrepancy(const DenseTrajectory& a, const DenseTrajectory& b, std::span<const double> times) {
  std::vector<double> ya(a.dimension()), yb(b.dimension());
  double worst = 0.0;
  for (double t : times) {
    a.evaluate(t, ya);
    b.evaluate(t, yb);
    double diff = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < ya.size(); ++i) {
      diff = std::max(diff, std::abs(ya[i] - yb[i]));
      scale = std::max(scale, std::abs(yb[i]));
    }
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

}  // namespace clonesim::dde
