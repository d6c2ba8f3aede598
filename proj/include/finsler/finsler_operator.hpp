#pragma once

#include "finsler/dual.hpp"
#include "finsler/grid.hpp"
#include "finsler/radial_profile.hpp"

#include <cstdint>
#include <vector>

namespace finsler {

/// Discrete Δ_H u = div A(∇u) as the negative gradient of a discrete energy.
///
/// In each cell, every corner c gets the gradient g_c built from the N cell edges that
/// meet at c. The energy is ψ_h(u) = Σ_cells Σ_c (|cell|/2^N) H(g_c)²/2, and
/// Δ_h u = −(1/|cell|) ∂ψ_h/∂u. Written out, the flux on edge (p, p+e_a) is the mean of
/// A_a(g_c) over the 2^N corners adjacent to that edge, and
/// Δ_h u(p) = Σ_a (F_a(p) − F_a(p−e_a)) / h_a. For H = |·| this is the (2N+1)-point Laplacian.
///
/// Free nodes are where Δ_h is evaluated; all other nodes are held fixed. By default the
/// free nodes are the box interior. Only cells touching a free node are visited.
class FinslerOperator {
 public:
  FinslerOperator(const GridShape& shape, NormSpec norm);
  /// `free_mask[i] != 0` marks node i as free. Box-boundary nodes are never free.
  FinslerOperator(const GridShape& shape, NormSpec norm, const std::vector<std::uint8_t>& free_mask);

  const GridShape& shape() const { return shape_; }
  const NormSpec& norm() const { return norm_; }
  const std::vector<std::size_t>& free_nodes() const { return free_; }
  bool is_free(std::size_t i) const { return mask_[i] != 0; }

  /// Writes Δ_h u on free nodes and 0 elsewhere; returns ψ_h(u) over the visited cells.
  double apply(const std::vector<double>& u, std::vector<double>& lap) const;
  double energy(const std::vector<double>& u) const;
  /// Δ_h u on free nodes, 0 elsewhere. Norms with quadratic energy use the equivalent
  /// 3^N-point stencil, read off from the kernel once.
  void laplacian(const std::vector<double>& u, std::vector<double>& lap) const;

 private:
  void init(const std::vector<std::uint8_t>& free_mask);

  GridShape shape_;
  NormSpec norm_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> free_;
  std::vector<std::size_t> cells_;  // lower-corner node of every visited cell
  mutable std::vector<double> flux_;
  std::vector<std::ptrdiff_t> stencil_offset_;
  std::vector<double> stencil_coeff_;
};

/// Δ_h u on the box interior; the one-node boundary halo is NaN.
GridFunction finsler_laplacian(const GridFunction& u, const NormSpec& norm);

/// ψ_h(u) over every cell of the box.
double discrete_energy(const GridFunction& u, const NormSpec& norm);

/// r ↦ v♯'' + (N−1)v♯'/r with the value N·v♯''(0) at r = 0, on the knots of `rp`.
RadialProfile radial_laplacian(const RadialProfile& rp, int dimension);
/// Same quantity evaluated from the spline at a single radius.
double radial_laplacian_at(const RadialProfile& rp, int dimension, double r);

/// v(x) = v♯(H0(x)). Throws RangeError if some node has H0(x) > r_max.
GridFunction lift_radial(const RadialProfile& rp, const NormSpec& norm, const GridShape& shape,
                         const DualEvalConfig& cfg = {});

/// Per-node H0(x).
GridFunction dual_norm_field(const NormSpec& norm, const GridShape& shape,
                             const DualEvalConfig& cfg = {});

struct RefinementLevel {
  double h = 0.0;
  double max_error = 0.0;
  double mean_error = 0.0;
  std::size_t nodes = 0;
};

/// log2(e_coarse / e_fine) of the max errors of the last two levels.
double observed_order(const std::vector<RefinementLevel>& levels);

struct ReductionReport {
  std::vector<RefinementLevel> levels;
  double order = 0.0;
};

/// |Δ_h lift(v♯) − radial Laplacian(H0(x))| on interior nodes with H0(x) ≥ r_cut_factor·h, on
/// `shape` and on each of `refinements` successive halvings.
ReductionReport check_radial_reduction(const RadialProfile& rp, const NormSpec& norm,
                                       const GridShape& shape, int refinements = 1,
                                       double r_cut_factor = 2.0);

struct LinearityReport {
  std::vector<RefinementLevel> radial;   // defect of the H0-radial pair
  std::vector<RefinementLevel> control;  // defect of the pair x1², x2²
  double radial_order = 0.0;
};

/// max |Δ_h(αv+βw) − αΔ_h v − βΔ_h w| for the radial lifts of rp1, rp2 and for the
/// non-radial control pair v = x1², w = x2².
LinearityReport check_linearity(const RadialProfile& rp1, const RadialProfile& rp2, double alpha,
                                double beta, const NormSpec& norm, const GridShape& shape,
                                int refinements = 1, double r_cut_factor = 2.0);

}  // namespace finsler
