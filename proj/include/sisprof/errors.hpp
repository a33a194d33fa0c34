#pragma once

#include <stdexcept>
#include <string>

namespace sisprof {

/// Invalid or inconsistent user configuration (bad key, out-of-range value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Programming/usage mistakes such as mixing fields from different grids.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A solver failed to converge. Carries the last iteration count and residual.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iterations = 0, double residual = 0.0)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// The equilibrium search found only the disease-free state.
class NoEquilibrium : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A limit quantity was requested outside the parameter regime where it is defined.
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace sisprof
