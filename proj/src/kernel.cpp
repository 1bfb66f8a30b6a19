#include "clonesim/kernel.hpp"

#include <cmath>
#include <string>

#include "clonesim/errors.hpp"

namespace clonesim {

StateLayout::StateLayout(int cohorts, int K) : cohorts_(cohorts), depth_(K) {
  if (cohorts < 1) throw InvalidArgument("state layout needs at least one cohort");
  if (K < 2) throw InvalidArgument("state layout needs K >= 2");
}

ExpansionModel::ExpansionModel(ModelParams params, Supplies supplies)
    : params_(params),
      supplies_(std::move(supplies)),
      layout_(static_cast<int>(supplies_.naive.size()), params.K),
      survival_(std::exp(-params.d * params.tau)) {
  validate(params_);
  validate(supplies_.antigen);
  for (const auto& n : supplies_.naive) validate(n);
  rates_.reserve(static_cast<std::size_t>(params_.K));
  for (int i = 1; i <= params_.K; ++i) rates_.push_back(proliferation_rate(i, params_));
}

void ExpansionModel::operator()(double t, std::span<const double> now, std::span<const double> lag_sigma,
                                std::span<const double> lag_tau, std::span<double> out) const {
  const std::size_t n = layout_.size();
  if (now.size() != n || lag_sigma.size() != n || lag_tau.size() != n || out.size() != n) {
    throw InvalidArgument("state dimension mismatch in rhs");
  }
  const int K = params_.K;
  const double A = now[0];
  const double A_sigma = lag_sigma[0];
  const double A_tau = lag_tau[0];
  const double r_N = params_.r_N;
  const double d = params_.d;

  double grazing = 0.0;
  for (int c = 0; c < layout_.cohorts(); ++c) {
    const std::size_t b = layout_.cohort_begin(c);
    const double N = now[b];
    const double N_sigma = lag_sigma[b];
    const auto T = now.subspan(b + 1, static_cast<std::size_t>(K));
    const auto T_tau = lag_tau.subspan(b + 1, static_cast<std::size_t>(K));
    const auto D = now.subspan(layout_.transit(c, 1), static_cast<std::size_t>(K - 1));
    auto dT = out.subspan(b + 1, static_cast<std::size_t>(K));
    auto dD = out.subspan(layout_.transit(c, 1), static_cast<std::size_t>(K - 1));

    const double activation = r_N * N * A;
    const double first_arrival = r_N * N_sigma * A_sigma;
    out[b] = naive_supply_rate(t, supplies_.naive[static_cast<std::size_t>(c)]) - activation;
    out[layout_.first_transit(c)] = activation - first_arrival;
    dT[0] = 2.0 * first_arrival - d * T[0];

    double activated_sum = 0.0;
    for (int i = 1; i <= K; ++i) {
      const std::size_t k = static_cast<std::size_t>(i - 1);
      activated_sum += T[k];
      if (i >= 2) dT[k] = 2.0 * rates_[k - 1] * survival_ * T_tau[k - 1] * A_tau - d * T[k];
      // T[K] has no division outflow.
      if (i < K) {
        const double leaving = rates_[k] * T[k] * A;
        const double arriving = rates_[k] * T_tau[k] * A_tau * survival_;
        dT[k] -= leaving;
        dD[k] = leaving - arriving - d * D[k];
      }
    }
    grazing += params_.s_N * N;
    grazing += params_.s * activated_sum;
  }
  out[0] = antigen_supply_rate(t, supplies_.antigen) - grazing * A - params_.d_A * A;

  for (double v : out) {
    if (!std::isfinite(v)) throw IntegrationError("nonfinite derivative at t=" + std::to_string(t));
  }
}

std::vector<double> rhs(double t, std::span<const double> now, std::span<const double> lag_sigma,
                        std::span<const double> lag_tau, const Supplies& supplies, const ModelParams& params) {
  const ExpansionModel model(params, supplies);
  std::vector<double> out(model.layout().size());
  model(t, now, lag_sigma, lag_tau, out);
  return out;
}

double total_t_cells(std::span<const double> state, const StateLayout& layout, int cohort) {
  if (state.size() != layout.size()) throw InvalidArgument("state dimension mismatch");
  if (cohort == kAllCohorts) {
    double total = 0.0;
    for (int c = 0; c < layout.cohorts(); ++c) total += total_t_cells(state, layout, c);
    return total;
  }
  if (cohort < 0 || cohort >= layout.cohorts()) {
    throw InvalidArgument("unknown cohort " + std::to_string(cohort));
  }
  double total = 0.0;
  const std::size_t b = layout.cohort_begin(cohort);
  for (std::size_t k = 0; k < layout.block(); ++k) total += state[b + k];
  return total;
}

double activated_t_cells(std::span<const double> state, const StateLayout& layout, int cohort) {
  if (cohort < 0 || cohort >= layout.cohorts()) {
    throw InvalidArgument("unknown cohort " + std::to_string(cohort));
  }
  return total_t_cells(state, layout, cohort) - state[layout.naive(cohort)];
}

}  // namespace clonesim
