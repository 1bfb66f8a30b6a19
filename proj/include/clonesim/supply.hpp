#pragma once

namespace clonesim {

/// Gaussian arrival of adoptively transferred naive cells into the lymph
/// node, peaking `offset` hours after the injection time `t_c`.
struct NaiveSupplySpec {
  double dose = 0.0;     // cells per 10^5 leukocytes
  double t_c = 0.0;      // injection time (h)
  double offset = 3.0;   // peak lag (h)
  double p = 0.75;       // spread (h)
  bool enabled = true;

  double peak_time() const { return t_c + offset; }
  friend bool operator==(const NaiveSupplySpec&, const NaiveSupplySpec&) = default;
};

/// Long-tailed antigen arrival: a one-sided stable (Levy) density with
/// location t_k + onset. Only alpha = 1/2, beta = 1 is supported, where
/// the density has the closed form
///   gamma^(1/2) / sqrt(2 pi) * exp(-gamma / (2x)) / x^(3/2),  x = t - location.
struct AntigenSupplySpec {
  double dose = 1.0;     // fraction of the injected dose
  double t_k = 0.0;      // injection time (h)
  double onset = 12.0;   // lag before antigen reaches the node (h)
  double alpha = 0.5;
  double beta = 1.0;
  double gamma = 1.0;

  double location() const { return t_k + onset; }
  friend bool operator==(const AntigenSupplySpec&, const AntigenSupplySpec&) = default;
};

void validate(const NaiveSupplySpec& spec);
void validate(const AntigenSupplySpec& spec);

double naive_supply_rate(double t, const NaiveSupplySpec& spec);
double antigen_supply_rate(double t, const AntigenSupplySpec& spec);

/// Amount supplied over (-inf, t].
double naive_supply_cumulative(double t, const NaiveSupplySpec& spec);
double antigen_supply_cumulative(double t, const AntigenSupplySpec& spec);

}  // namespace clonesim
