#pragma once

#include <functional>
#include <vector>

namespace finsler {

/// Samples of v♯ on [0, R] with a cubic spline interpolant.
///
/// Even profiles use the clamped end condition v♯'(0) = 0, otherwise the natural one.
/// The right end is clamped to the slope of the cubic through the last four samples.
class RadialProfile {
 public:
  RadialProfile(std::vector<double> radii, std::vector<double> values, bool even);

  /// `samples` equally spaced points on [0, r_max].
  static RadialProfile sample(const std::function<double(double)>& f, double r_max, int samples,
                              bool even = true);

  const std::vector<double>& radii() const { return r_; }
  const std::vector<double>& values() const { return v_; }
  bool even() const { return even_; }
  double r_max() const { return r_.back(); }

  /// Spline value, first and second derivative. Throws RangeError beyond r_max.
  double operator()(double r) const;
  double derivative(double r) const;
  double second_derivative(double r) const;

 private:
  std::size_t locate(double r) const;

  std::vector<double> r_, v_, m_;  // m_ holds spline second derivatives at the knots
  bool even_;
};

}  // namespace finsler
