#pragma once

#include "finsler/dual.hpp"
#include "finsler/radial_profile.hpp"

#include <string_view>
#include <vector>

namespace finsler {

enum class QuadratureKind { gauss_legendre, chebyshev_gauss };

std::string_view to_string(QuadratureKind kind);
QuadratureKind quadrature_kind_from_string(std::string_view name);

/// Gauss-Legendre on [a, b], or Chebyshev-Gauss for ∫_{-1}^{1} f(t)(1−t²)^{-1/2} dt.
/// For Chebyshev-Gauss the weights sum to π, the measure of the weight function.
struct QuadratureRule {
  QuadratureKind kind = QuadratureKind::gauss_legendre;
  double a = -1.0, b = 1.0;
  std::vector<double> nodes, weights;

  static QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);
  static QuadratureRule chebyshev_gauss(int n);

  int size() const { return static_cast<int>(nodes.size()); }
  double measure() const;
  void validate() const;
};

struct SphereIntegralConfig {
  int dimension = 2;
  QuadratureRule rule;
  int series_terms = 60;

  /// Chebyshev-Gauss(64) for even N, Gauss-Legendre(64) for odd N.
  static SphereIntegralConfig defaults(int dimension);
  void validate() const;
};

/// Surface measure of S^n (ω_0 = 2, ω_1 = 2π, ω_2 = 4π).
double sphere_measure(int n);

/// I(z) = ∫_{S^{N−1}} e^{zθ₁} dθ = ω_{N−2} ∫_{−1}^{1} e^{zt}(1−t²)^{(N−3)/2} dt, and
/// I(z) = e^z + e^{−z} for N = 1. Throws RangeError for z > 700.
double sphere_integral_I(double z, const SphereIntegralConfig& cfg);
/// e^{−z} I(z), finite for every z ≥ 0. Uses the configured rule while z ≤ nodes/2 and
/// Gauss-Legendre panels graded to the peak at θ = 0 beyond that.
double sphere_integral_I_scaled(double z, const SphereIntegralConfig& cfg);

/// Partial sum Σ_{n<terms} (z/2)^{2n}/(n!)².
double bessel_I0(double z, int terms = 60);
/// e^{−|z|} I₀(z): series up to |z| = 30, asymptotic expansion above.
double bessel_I0_scaled(double z);

struct RadialSolveOptions {
  double tolerance = 1e-9;       // panel doubling stops when successive values differ by ≤ tol·max(1,|u|)
  double tail_tolerance = 1e-12;  // bound on the neglected Gaussian tail
  int nodes_per_panel = 64;       // Gauss-Legendre nodes per unit-length panel
  int max_doublings = 14;
};

/// Representation formula for H0-radial data φ(x) = φ♯(H0(x)), evaluated at r = H0(x):
/// u = (4πt)^{−N/2} ∫ Î(rρ/2t) e^{−(r−ρ)²/4t} φ♯(ρ) ρ^{N−1} dρ with Î(z) = e^{−z}I(z).
/// Only ρ with e^{−(r−ρ)²/4t} above 1e-16 is integrated. Throws RangeError when the profile
/// ends before that window and the cut tail sup|φ♯|·e^{−(R−r)²/4t} exceeds tail_tolerance.
double radial_heat_solution_at(const RadialProfile& phi, int dimension, double r, double t,
                               const SphereIntegralConfig& cfg, const RadialSolveOptions& opts = {});

double radial_heat_solution(const RadialProfile& phi, const NormSpec& norm, const Vec& x, double t,
                            const SphereIntegralConfig& cfg, const RadialSolveOptions& opts = {},
                            const DualEvalConfig& dual = {});

}  // namespace finsler
