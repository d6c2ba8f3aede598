#pragma once

#include "finsler/dual.hpp"
#include "finsler/finsler_operator.hpp"
#include "finsler/grid.hpp"
#include "finsler/initial_data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finsler {

enum class Scheme { implicit_proximal, explicit_euler };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

struct InnerSolverOptions {
  double tolerance = 1e-10;
  int max_iters = 10000;

  void validate() const;
};

/// Box around Ω = B_{H0}(0, R): axis a spans ±c_a·h with c_a = ⌈R·H(e_a)/h⌉, so the origin
/// is a node and grids built with the same h are nested sublattices of each other.
GridShape domain_grid(const NormSpec& norm, double radius, double spacing);

/// 1 on nodes with H0(x) < R away from the box faces, 0 elsewhere.
std::vector<std::uint8_t> domain_mask(const NormSpec& norm, const GridShape& shape, double radius,
                                      const DualEvalConfig& cfg = {});

/// Sets every node outside the mask to 0.
void apply_mask(GridFunction& u, const std::vector<std::uint8_t>& mask);

/// ψ_h(u) over the cells touching Ω. Same discrete energy whose negative gradient is Δ_h.
double energy(const GridFunction& u, const NormSpec& norm, const std::vector<std::uint8_t>& mask);

/// Largest explicit step h_min²/(2N·C₂).
double explicit_step_limit(const NormSpec& norm, const GridShape& shape);

struct ProxResult {
  GridFunction u;
  int iterations = 0;
  double gradient_norm = 0.0;  // discrete L² norm of ∇J at the returned point
};

/// Minimizer of J(u) = Σ_free (u − u_prev)²/(2τ) + ψ_h(u)/|cell| over grids vanishing off the
/// mask. Nesterov descent for strongly convex J (μ = 1/τ) with gradient restarts; L starts at
/// 1/τ + 4C₂Σ_a h_a⁻², which bounds the Hessian when H² is quadratic, and is doubled by
/// backtracking otherwise. Stops once ‖∇J‖ ≤ tolerance·(1 + ‖u_prev‖) in the discrete L² norm;
/// throws ConvergenceError after max_iters.
class ProximalSolver {
 public:
  ProximalSolver(const GridShape& shape, NormSpec norm, const std::vector<std::uint8_t>& mask, double tau,
                 InnerSolverOptions inner = {});

  /// `guess`, when given, is the starting iterate (masked first).
  ProxResult step(const GridFunction& u_prev, const GridFunction* guess = nullptr);

  const FinslerOperator& op() const { return op_; }
  double tau() const { return tau_; }

 private:
  double objective(const std::vector<double>& x, const std::vector<double>& u_prev) const;

  FinslerOperator op_;
  double tau_;
  InnerSolverOptions inner_;
  bool quadratic_;
  double lipschitz_;
  std::vector<double> x_, x_old_, y_, g_, lap_, trial_, trial_lap_;
};

ProxResult proximal_step(const GridFunction& u_prev, const NormSpec& norm, const std::vector<std::uint8_t>& mask,
                         double tau, const InnerSolverOptions& inner = {});

/// u_prev + τΔ_h u_prev on free nodes, 0 elsewhere. Throws InvalidSpec when τ exceeds
/// explicit_step_limit.
GridFunction explicit_step(const GridFunction& u_prev, const NormSpec& norm, const std::vector<std::uint8_t>& mask,
                           double tau);

/// ∫ e^{−2g(y,t)} u² dy with g = λH0²/(1 − 4λt). DomainError for t ≥ 1/(4λ).
double monitor_weighted_L2(const GridFunction& u, const GridFunction& h0, double lambda, double t);
double monitor_weighted_L2(const GridFunction& u, const NormSpec& norm, double lambda, double t);

/// ∫ e^{−g_λ(y,t)} |u| dy with g_λ = λH0²/(1 − 4λt).
double monitor_weighted_L1(const GridFunction& u, const GridFunction& h0, double lambda, double t);

/// sup over centers x of ∫_{B_{H0}(x,1)} e^{−h(y,t)} |u| dy with h = H0²(1 + t^ℓ), ℓ ∈ (0, 1/2).
/// Centers are the nodes whose every index is a multiple of `center_stride` (1 = all nodes).
double monitor_weighted_L1_local(const GridFunction& u, const GridFunction& h0, const NormSpec& norm, double ell,
                                 double t, int center_stride = 1, const DualEvalConfig& cfg = {});

struct MonitorSpec {
  std::vector<double> l2_lambdas;   // weighted L² quantity per λ
  std::vector<double> l1_lambdas;   // λ-form weighted L¹ per λ
  std::vector<double> local_ells;   // localized weighted L¹ per ℓ
  int center_stride = 4;
};

struct FlowProblem {
  NormSpec norm = NormSpec::euclidean(2);
  double radius = 1.0;    // Ω = B_{H0}(0, R)
  double spacing = 0.1;   // h
  std::optional<GridFunction> datum;  // on grid(); values off Ω are dropped
  std::optional<MeasureSpec> measure;  // mollified onto grid() when no grid datum is given
  double mollifier_width = 0.0;       // 0 means 2h
  Scheme scheme = Scheme::implicit_proximal;
  double tau = 1e-3;
  double end_time = 0.1;
  InnerSolverOptions inner;
  std::vector<double> stamps;  // slice times, multiples of τ in [0, T]; empty means {0, T}
  MonitorSpec monitors;
  DualEvalConfig dual;

  void validate() const;
  GridShape grid() const;
  int steps() const;
  /// Datum on grid(), masked.
  GridFunction initial(const std::vector<std::uint8_t>& mask) const;
};

struct MonitorSeries {
  std::string name;  // "weighted_l2", "weighted_l1" or "weighted_l1_local"
  double parameter = 0.0;  // λ or ℓ
  std::vector<double> values;  // one per entry of Trajectory::times
};

struct Trajectory {
  GridShape shape;
  std::vector<std::uint8_t> mask;
  std::vector<double> stamps;
  std::vector<GridFunction> slices;
  std::vector<double> times;  // 0, τ, 2τ, ...
  std::vector<double> energy;
  std::vector<double> mass;
  std::vector<double> min_value;
  std::vector<std::uint8_t> support_clear;  // |u| ≤ 1e-8 within 4 nodes of the fixed set
  std::vector<int> inner_iterations;
  std::vector<MonitorSeries> monitors;
  bool completed = true;
  std::string diagnostic;
};

/// Marches from the datum to T. On inner non-convergence the partial trajectory is returned
/// with completed = false and the reason in `diagnostic`.
Trajectory solve(const FlowProblem& problem);

struct InvariantReport {
  double max_energy_increase = 0.0;  // max_k ψ(u_{k+1}) − ψ(u_k)
  bool nonnegative_datum = false;
  double min_value = 0.0;            // over all steps
  double max_mass_drift = 0.0;       // |mass − mass₀| while the support stays clear of ∂Ω
  std::vector<double> l2_lambdas;
  std::vector<double> l2_excess;     // max_t value(t) − value(0) per λ
  double local_ratio = 0.0;          // max_t value(t)/value(0) over the localized monitors (empirical C*)
};

InvariantReport check_invariants(const Trajectory& trajectory);

struct ScalingReport {
  int k = 1;
  double defect = 0.0;            // max |u_k(x, T/k²) − u(kx, T)|
  std::size_t samples = 0;
  double amplitude_defect = 0.0;  // max |u[2φ] − 2u[φ]| at T; NaN unless the scheme is implicit
  double max_energy_increase = 0.0;  // over every trajectory the check ran
};

/// Solves the base problem, the rescaled one with φ_k(x) = φ(kx) on Ω/k with τ/k² and T/k² on
/// the same spacing h (so kx is a base node for every node x), and 2φ for the amplitude part.
ScalingReport scaling_check(const FlowProblem& base, int k, bool amplitude = true);

struct NestedOptions {
  double spacing = 0.1;
  double tau = 0.01;
  double end_time = 0.2;
  double window_start = 0.1;
  double core_radius = 1.0;
  InnerSolverOptions inner;
  GrowthSampling sampling;
  DualEvalConfig dual;
};

struct NestedReport {
  std::vector<double> radii;
  std::vector<double> differences;  // core-window max |u_{m_{i+1}} − u_{m_i}|
  bool decreasing = true;
  double max_energy_increase = 0.0;  // over every trajectory the study ran
};

/// Solves on B_{H0}(0, m) for each m with datum ζ_m·(mollified μ) and compares consecutive
/// solutions on H0 ≤ core_radius over the step times in [window_start, end_time]. Throws
/// InvalidSpec when μ fails the growth condition for λ or T ≥ 1/(4λ).
NestedReport nested_domain_study(const MeasureSpec& mu, const std::vector<double>& radii, const NormSpec& norm,
                                 double lambda, const NestedOptions& options = {});

}  // namespace finsler
