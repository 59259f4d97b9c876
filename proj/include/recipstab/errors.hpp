#pragma once

#include <stdexcept>
#include <string>

namespace recipstab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

// An evaluation point hits a zero of the equation's denominator or of a
// shifted argument. `guard()` names the failed condition, e.g. "y != 2x".
class DegenerateDenominator : public Error {
 public:
  DegenerateDenominator(std::string guard)
      : Error("degenerate denominator: guard '" + guard + "' violated"),
        guard_(std::move(guard)) {}
  const std::string& guard() const noexcept { return guard_; }

 private:
  std::string guard_;
};

// A real l-th root was requested of a nonpositive sample.
class RootBranchError : public Error {
 public:
  using Error::Error;
};

// A corollary parameter sits on an excluded value (alpha = -l, p+q = -l).
class ParameterExclusion : public Error {
 public:
  using Error::Error;
};

// The supplied control does not dominate the observed residual.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace recipstab
