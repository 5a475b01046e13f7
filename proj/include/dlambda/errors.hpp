#pragma once

#include <stdexcept>
#include <string>

namespace dlambda {

/// Invalid or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (non-finite values, singular systems,
/// quadrature that did not converge).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense linear solve was rank-deficient beyond the expected trace redundancy.
class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Propagation produced a non-finite amplitude.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double z) : NumericalError(what), z_(z) {}
  double z() const noexcept { return z_; }

 private:
  double z_;
};

}  // namespace dlambda
