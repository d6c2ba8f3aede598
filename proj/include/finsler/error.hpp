#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters for a norm, grid, rule or experiment configuration.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. a gradient at 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Result not representable (overflow guards, out-of-range lookups, tails too heavy).
class RangeError : public Error {
 public:
  RangeError(const std::string& what, double bound = 0.0) : Error(what), bound_(bound) {}
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

/// An iterative procedure stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best, double residual)
      : Error(what), best_(best), residual_(residual) {}
  /// Best value found so far (or 0 when not meaningful).
  double best() const noexcept { return best_; }
  /// Residual or gap estimate at termination.
  double residual() const noexcept { return residual_; }

 private:
  double best_;
  double residual_;
};

}  // namespace finsler
