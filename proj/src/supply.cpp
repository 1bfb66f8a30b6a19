#include "clonesim/supply.hpp"

#include <cmath>
#include <numbers>

#include "clonesim/errors.hpp"

namespace clonesim {

void validate(const NaiveSupplySpec& spec) {
  if (!std::isfinite(spec.dose) || spec.dose < 0.0) throw InvalidArgument("naive supply dose must be >= 0");
  if (!std::isfinite(spec.t_c) || !std::isfinite(spec.offset)) {
    throw InvalidArgument("naive supply timing must be finite");
  }
  if (!(spec.p > 0.0) || !std::isfinite(spec.p)) throw InvalidArgument("naive supply spread must be > 0");
}

void validate(const AntigenSupplySpec& spec) {
  if (!std::isfinite(spec.dose) || spec.dose < 0.0) throw InvalidArgument("antigen dose must be >= 0");
  if (!std::isfinite(spec.t_k) || !std::isfinite(spec.onset)) {
    throw InvalidArgument("antigen timing must be finite");
  }
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) throw InvalidArgument("antigen scale gamma must be > 0");
  if (spec.alpha != 0.5 || spec.beta != 1.0) {
    throw InvalidArgument("antigen supply supports only the one-sided Levy case alpha=0.5, beta=1");
  }
}

double naive_supply_rate(double t, const NaiveSupplySpec& spec) {
  if (!spec.enabled || spec.dose == 0.0) return 0.0;
  const double z = (t - spec.peak_time()) / spec.p;
  return spec.dose * std::exp(-0.5 * z * z) / (spec.p * std::sqrt(2.0 * std::numbers::pi));
}

double antigen_supply_rate(double t, const AntigenSupplySpec& spec) {
  const double x = t - spec.location();
  if (x <= 0.0 || spec.dose == 0.0) return 0.0;
  // Log form: the exponential underflows before x^{-3/2} overflows.
  return spec.dose * std::sqrt(spec.gamma / (2.0 * std::numbers::pi)) *
         std::exp(-spec.gamma / (2.0 * x) - 1.5 * std::log(x));
}

double naive_supply_cumulative(double t, const NaiveSupplySpec& spec) {
  if (!spec.enabled) return 0.0;
  const double z = (t - spec.peak_time()) / spec.p;
  return spec.dose * 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double antigen_supply_cumulative(double t, const AntigenSupplySpec& spec) {
  const double x = t - spec.location();
  if (x <= 0.0) return 0.0;
  return spec.dose * std::erfc(std::sqrt(spec.gamma / (2.0 * x)));
}

}  // namespace clonesim
