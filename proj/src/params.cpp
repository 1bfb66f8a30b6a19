#include "clonesim/params.hpp"

#include <cmath>
#include <string>

#include "clonesim/errors.hpp"

namespace clonesim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("invalid-params: " + what);
}

}  // namespace

void validate(const ModelParams& p) {
  for (const auto& name : param_names()) {
    const double v = get_param(p, name);
    require(std::isfinite(v), name + " must be finite");
    require(v >= 0.0, name + " must be nonnegative");
  }
  require(p.sigma > 0.0, "sigma must be positive");
  require(p.tau > 0.0, "tau must be positive");
  require(p.M >= 1, "M must be at least 1");
  require(p.g * p.M < 1.0, "g*M must be below 1");
  require(p.K >= p.M, "K must be at least M");
  require(p.K >= 2, "K must be at least 2");
}

double proliferation_rate(int division, const ModelParams& p) {
  if (division < 1) throw InvalidArgument("invalid-params: division index must be >= 1");
  if (p.g * p.M >= 1.0 || p.g < 0.0) throw InvalidArgument("invalid-params: g*M must lie in [0, 1)");
  if (division < p.M) return p.r_e * (1.0 - p.g * (division - 1));
  return p.r_e * (1.0 - p.g * p.M);
}

const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names{"r_e", "r_N", "g",   "M",   "d", "s",
                                              "s_N", "sigma", "tau", "d_A", "K"};
  return names;
}

const std::vector<std::string>& fittable_param_names() {
  static const std::vector<std::string> names{"r_e", "r_N", "g", "d", "tau", "s"};
  return names;
}

bool is_integer_param(std::string_view name) { return name == "M" || name == "K"; }

double get_param(const ModelParams& p, std::string_view name) {
  if (name == "r_e") return p.r_e;
  if (name == "r_N") return p.r_N;
  if (name == "g") return p.g;
  if (name == "M") return p.M;
  if (name == "d") return p.d;
  if (name == "s") return p.s;
  if (name == "s_N") return p.s_N;
  if (name == "sigma") return p.sigma;
  if (name == "tau") return p.tau;
  if (name == "d_A") return p.d_A;
  if (name == "K") return p.K;
  throw InvalidArgument("unknown parameter '" + std::string(name) + "'");
}

void set_param(ModelParams& p, std::string_view name, double value) {
  if (is_integer_param(name)) {
    if (value != std::floor(value)) {
      throw InvalidArgument("parameter '" + std::string(name) + "' must be an integer");
    }
    (name == "M" ? p.M : p.K) = static_cast<int>(value);
    return;
  }
  if (name == "r_e") p.r_e = value;
  else if (name == "r_N") p.r_N = value;
  else if (name == "g") p.g = value;
  else if (name == "d") p.d = value;
  else if (name == "s") p.s = value;
  else if (name == "s_N") p.s_N = value;
  else if (name == "sigma") p.sigma = value;
  else if (name == "tau") p.tau = value;
  else if (name == "d_A") p.d_A = value;
  else throw InvalidArgument("unknown parameter '" + std::string(name) + "'");
}

}  // namespace clonesim
