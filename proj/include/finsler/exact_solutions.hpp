#pragma once

#include "finsler/dual.hpp"
#include "finsler/finsler_operator.hpp"
#include "finsler/grid.hpp"

#include <limits>
#include <string>
#include <vector>

namespace finsler {

enum class SolutionKind { gauss_kernel, blowup, barenblatt, talenti, singular_poly };

std::string_view to_string(SolutionKind kind);
SolutionKind solution_kind_from_string(std::string_view name);

/// One of the closed-form H0-radial families. Each value is v♯(H0(x), t).
///
///   gauss_kernel   (4πt)^{-N/2} exp(−r²/4t)
///   blowup(Λ)      (1−4Λt)^{-N/2} exp(Λr²/(1−4Λt)),  0 ≤ t < 1/(4Λ)
///   barenblatt     t^{-α}(C − k r² t^{-2β})_+^{1/(m−1)},  solves ∂_t v = Δ_H v^m
///   talenti        (A + B r^{p/(p−1)})^{1−N/p}
///   singular_poly  r^{2m−N}, or r^{2m−N} log r when N − 2m ∈ {0, −2, −4, ...}
struct SolutionSpec {
  SolutionKind kind = SolutionKind::gauss_kernel;
  NormSpec norm = NormSpec::euclidean(2);
  double lambda = 0.25;
  double m = 2.0, C = 1.0;
  double p = 3.0, A = 1.0, B = 1.0;
  int m_order = 1;

  static SolutionSpec gauss_kernel(NormSpec norm);
  static SolutionSpec blowup(NormSpec norm, double lambda);
  static SolutionSpec barenblatt(NormSpec norm, double m, double C);
  static SolutionSpec talenti(NormSpec norm, double p, double A, double B);
  static SolutionSpec singular_poly(NormSpec norm, int m_order);

  void validate() const;
  int dimension() const { return norm.dimension(); }
  bool stationary() const { return kind == SolutionKind::talenti || kind == SolutionKind::singular_poly; }
  /// Supremum of the valid time range (1/(4Λ) for blowup, ∞ otherwise).
  double max_time() const;
  std::string describe() const;
};

struct BarenblattExponents {
  double alpha, beta, k;
};
BarenblattExponents barenblatt_exponents(int dimension, double m);

/// v♯(r, t) with r = H0(x).
double eval_profile(const SolutionSpec& s, double r, double t);
double eval_solution(const SolutionSpec& s, const Vec& x, double t, const DualEvalConfig& cfg = {});
/// Node values for a precomputed H0 field.
GridFunction eval_on_grid(const SolutionSpec& s, const GridFunction& h0, double t);

struct ResidualLevel {
  double h = 0.0;
  double dt = 0.0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  std::size_t nodes = 0;
};

struct ResidualReport {
  std::vector<ResidualLevel> levels;
  double order = 0.0;  // log2 of the last max-residual ratio
};

/// Which interior nodes are scored.
struct ResidualWindow {
  double r_min = 0.0;
  double r_max = std::numeric_limits<double>::infinity();
  /// Barenblatt: nodes within this many h of the free boundary are dropped.
  double free_boundary_band = 2.0;
};

/// Time-dependent families: (v(t+dt) − v(t−dt))/(2dt) − Δ_h F(v(t)), with F(v) = v^m for
/// Barenblatt and F(v) = v otherwise. Talenti: −Δ_h w − w^p. Singular polyharmonic: Δ_h w.
ResidualLevel pde_residual(const SolutionSpec& s, const GridShape& shape, double t, double dt,
                           const ResidualWindow& window = {});

/// pde_residual on `shape` and `refinements` halvings of (h, dt).
ResidualReport residual_study(const SolutionSpec& s, const GridShape& shape, double t, double dt,
                              int refinements = 1, const ResidualWindow& window = {});

struct SingularReport {
  double h = 0.0;
  double max_residual = 0.0;
  std::size_t nodes = 0;
};

/// Applies Δ_h m_order times to the punctured lift (the singular node is set to 0) and
/// reports the max over r_min ≤ H0(x) ≤ r_max, away from the growing boundary halo.
SingularReport singular_poly_check(const SolutionSpec& s, const GridShape& shape, double r_min = 0.25,
                                   double r_max = 1.0);

}  // namespace finsler
