#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clonesim {

/// Rate constants, delays and schedule parameters of the clonal expansion
/// model. Time is in hours, cell densities in cells per 10^5 leukocytes and
/// antigen in units of the injected dose. Defaults are the reference estimates.
struct ModelParams {
  double r_e = 1.5412;    // max proliferation coefficient
  double r_N = 0.0497;    // naive activation coefficient
  double g = 0.0994;      // per-division proliferation decrement
  int M = 10;             // division count at which the schedule plateaus
  double d = 0.0009;      // activated T cell clearance
  double s = 0.0009;      // antigen downregulation by activated cells
  double s_N = 0.0;       // antigen downregulation by naive cells
  double sigma = 24.0;    // first-division delay
  double tau = 3.9796;    // subsequent-division delay
  double d_A = 0.01;      // antigen decay
  int K = 20;             // compartment truncation depth

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws InvalidArgument when `p` breaks a model invariant.
void validate(const ModelParams& p);

/// Division-indexed proliferation rate r_i: linear decrease by `g` per
/// division, constant r_e(1 - gM) from division M on.
double proliferation_rate(int division, const ModelParams& p);

/// Names accepted by get_param/set_param, in declaration order.
const std::vector<std::string>& param_names();

/// Names of the parameters a fit may free: r_e, r_N, g, d, tau, s.
const std::vector<std::string>& fittable_param_names();

bool is_integer_param(std::string_view name);
double get_param(const ModelParams& p, std::string_view name);
void set_param(ModelParams& p, std::string_view name, double value);

}  // namespace clonesim
