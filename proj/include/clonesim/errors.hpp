#pragma once

#include <stdexcept>
#include <string>

namespace clonesim {

/// Parameter or specification values that violate a documented invariant.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The delay integrator could not produce a trajectory (nonfinite state,
/// step-size violation, failed Richardson verification).
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An observable is undefined for the given result (no divided cells,
/// zero denominator, degenerate regression input).
class UndefinedObservable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace clonesim
