#include "finsler/radial_profile.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {
namespace {

// Slope at x[3] of the cubic through four points.
double end_slope(const double* x, const double* y) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    // derivative of the i-th Lagrange basis polynomial at x[3]
    double li = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      double prod = 1.0 / (x[i] - x[j]);
      for (int k = 0; k < 4; ++k) {
        if (k != i && k != j) prod *= (x[3] - x[k]) / (x[i] - x[k]);
      }
      li += prod;
    }
    s += y[i] * li;
  }
  return s;
}

}  // namespace

RadialProfile::RadialProfile(std::vector<double> radii, std::vector<double> values, bool even)
    : r_(std::move(radii)), v_(std::move(values)), even_(even) {
  const std::size_t n = r_.size();
  if (n != v_.size()) throw InvalidSpec("radial profile: radii and values differ in length");
  if (n < 8) throw InvalidSpec("radial profile: at least 8 samples required");
  if (r_[0] != 0.0) throw InvalidSpec("radial profile: first radius must be 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(r_[i] > r_[i - 1])) throw InvalidSpec("radial profile: radii must increase strictly");
  }
  for (double v : v_) {
    if (!std::isfinite(v)) throw InvalidSpec("radial profile: non-finite value");
  }

  // Tridiagonal system for the knot second derivatives, solved by the Thomas algorithm.
  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = r_[i] - r_[i - 1], h1 = r_[i + 1] - r_[i];
    a[i] = h0 / 6.0;
    b[i] = (h0 + h1) / 3.0;
    c[i] = h1 / 6.0;
    d[i] = (v_[i + 1] - v_[i]) / h1 - (v_[i] - v_[i - 1]) / h0;
  }
  const double hl = r_[1] - r_[0];
  if (even_) {
    b[0] = hl / 3.0;
    c[0] = hl / 6.0;
    d[0] = (v_[1] - v_[0]) / hl;
  } else {
    b[0] = 1.0;
  }
  const double hr = r_[n - 1] - r_[n - 2];
  const double slope = end_slope(&r_[n - 4], &v_[n - 4]);
  a[n - 1] = hr / 6.0;
  b[n - 1] = hr / 3.0;
  d[n - 1] = slope - (v_[n - 1] - v_[n - 2]) / hr;

  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  m_.assign(n, 0.0);
  m_[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

RadialProfile RadialProfile::sample(const std::function<double(double)>& f, double r_max,
                                    int samples, bool even) {
  if (!(r_max > 0.0)) throw InvalidSpec("radial profile: r_max must be positive");
  if (samples < 8) throw InvalidSpec("radial profile: at least 8 samples required");
  std::vector<double> r(samples), v(samples);
  for (int i = 0; i < samples; ++i) {
    r[i] = r_max * i / (samples - 1);
    v[i] = f(r[i]);
  }
  r.back() = r_max;
  return RadialProfile(std::move(r), std::move(v), even);
}

std::size_t RadialProfile::locate(double r) const {
  if (r < 0.0 || !(r <= r_.back() * (1.0 + 1e-14))) {
    throw RangeError("radial profile evaluated outside [0, r_max]", r_.back());
  }
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const auto k = static_cast<std::size_t>(it - r_.begin());
  return std::clamp<std::size_t>(k, 1, r_.size() - 1) - 1;
}

double RadialProfile::operator()(double r) const {
  const auto i = locate(r);
  const double h = r_[i + 1] - r_[i];
  const double A = (r_[i + 1] - r) / h, B = (r - r_[i]) / h;
  return A * v_[i] + B * v_[i + 1] +
         ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double RadialProfile::derivative(double r) const {
  const auto i = locate(r);
  const double h = r_[i + 1] - r_[i];
  const double A = (r_[i + 1] - r) / h, B = (r - r_[i]) / h;
  return (v_[i + 1] - v_[i]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m_[i] +
         (3.0 * B * B - 1.0) / 6.0 * h * m_[i + 1];
}

double RadialProfile::second_derivative(double r) const {
  const auto i = locate(r);
  const double h = r_[i + 1] - r_[i];
  const double A = (r_[i + 1] - r) / h;
  return A * m_[i] + (1.0 - A) * m_[i + 1];
}

}  // namespace finsler
