#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clonesim/params.hpp"
#include "clonesim/supply.hpp"

namespace clonesim {

/// Index map of the flat state vector.
///
/// Slot 0 holds the antigen level A. Each cohort c then occupies a block of
/// 2K + 1 slots: N, T[1..K], D_N, D[1..K-1]. T[i] counts cells that have
/// completed i divisions; D_N and D[i] hold cells committed to their next
/// division and still in transit.
class StateLayout {
 public:
  StateLayout(int cohorts, int K);

  int cohorts() const { return cohorts_; }
  int depth() const { return depth_; }
  std::size_t size() const { return 1 + static_cast<std::size_t>(cohorts_) * block(); }
  std::size_t block() const { return 2 * static_cast<std::size_t>(depth_) + 1; }

  static constexpr std::size_t antigen() { return 0; }
  std::size_t cohort_begin(int c) const { return 1 + static_cast<std::size_t>(c) * block(); }
  std::size_t naive(int c) const { return cohort_begin(c); }
  /// i in [1, K]
  std::size_t activated(int c, int i) const { return cohort_begin(c) + static_cast<std::size_t>(i); }
  std::size_t first_transit(int c) const { return cohort_begin(c) + static_cast<std::size_t>(depth_) + 1; }
  /// i in [1, K-1]
  std::size_t transit(int c, int i) const { return first_transit(c) + static_cast<std::size_t>(i); }

  friend bool operator==(const StateLayout&, const StateLayout&) = default;

 private:
  int cohorts_;
  int depth_;
};

/// Time-dependent inputs: one antigen schedule shared by all cohorts and one
/// naive supply per cohort.
struct Supplies {
  AntigenSupplySpec antigen;
  std::vector<NaiveSupplySpec> naive;
};

/// Right-hand side of the multi-cohort delay system.
///
/// Holds the precomputed proliferation schedule so repeated evaluation inside
/// the integrator does no allocation. Immutable after construction.
class ExpansionModel {
 public:
  ExpansionModel(ModelParams params, Supplies supplies);

  const ModelParams& params() const { return params_; }
  const Supplies& supplies() const { return supplies_; }
  const StateLayout& layout() const { return layout_; }

  /// Writes the derivative at `t` into `out`. `lag_sigma` and `lag_tau` are
  /// the full state at t - sigma and t - tau.
  void operator()(double t, std::span<const double> now, std::span<const double> lag_sigma,
                  std::span<const double> lag_tau, std::span<double> out) const;

 private:
  ModelParams params_;
  Supplies supplies_;
  StateLayout layout_;
  std::vector<double> rates_;  // rates_[i - 1] = r_i
  double survival_;            // exp(-d tau)
};

/// Convenience form of ExpansionModel::operator().
std::vector<double> rhs(double t, std::span<const double> now, std::span<const double> lag_sigma,
                        std::span<const double> lag_tau, const Supplies& supplies, const ModelParams& params);

/// All cohorts.
inline constexpr int kAllCohorts = -1;

/// N + sum T[i] + D_N + sum D[i] for one cohort, or summed over all cohorts
/// when `cohort == kAllCohorts`. Transit cells count once.
double total_t_cells(std::span<const double> state, const StateLayout& layout, int cohort = kAllCohorts);

/// sum T[i] + D_N + sum D[i]: everything except the naive pool.
double activated_t_cells(std::span<const double> state, const StateLayout& layout, int cohort);

}  // namespace clonesim
