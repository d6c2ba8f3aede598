#include "finsler/flow_solver.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace finsler {

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::implicit_proximal ? "implicit_proximal" : "explicit_euler";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "implicit_proximal") return Scheme::implicit_proximal;
  if (name == "explicit_euler") return Scheme::explicit_euler;
  throw InvalidSpec("unknown scheme: " + std::string(name));
}

void InnerSolverOptions::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw InvalidSpec("inner tolerance must be positive");
  if (max_iters < 1) throw InvalidSpec("inner max_iters must be >= 1");
}

GridShape domain_grid(const NormSpec& norm, double radius, double spacing) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidSpec("domain radius must be positive");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidSpec("grid spacing must be positive");
  const int n = norm.dimension();
  if (n < 1 || n > kMaxGridDimension) throw InvalidSpec("flow grids support N = 1, 2, 3");
  GridShape s;
  s.dim = n;
  for (int a = 0; a < n; ++a) {
    const double half = radius * norm(Vec::Unit(n, a));
    const double c = std::ceil(half / spacing - 1e-9);
    if (c > 1e6) throw InvalidSpec("domain grid is too large for the spacing");
    const int cells = std::max(2, static_cast<int>(c));
    s.lo[a] = -cells * spacing;
    s.hi[a] = cells * spacing;
    s.cells[a] = 2 * cells;
  }
  s.validate();
  return s;
}

std::vector<std::uint8_t> domain_mask(const NormSpec& norm, const GridShape& shape, double radius,
                                      const DualEvalConfig& cfg) {
  const GridFunction h0 = dual_norm_field(norm, shape, cfg);
  std::vector<std::uint8_t> mask(shape.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = h0[i] < radius && !shape.on_boundary(i);
  return mask;
}

void apply_mask(GridFunction& u, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != u.size()) throw InvalidSpec("mask size does not match grid");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!mask[i]) u[i] = 0.0;
  }
}

double energy(const GridFunction& u, const NormSpec& norm, const std::vector<std::uint8_t>& mask) {
  return FinslerOperator(u.shape, norm, mask).energy(u.values);
}

double explicit_step_limit(const NormSpec& norm, const GridShape& shape) {
  double h = std::numeric_limits<double>::infinity();
  for (int a = 0; a < shape.dim; ++a) h = std::min(h, shape.spacing(a));
  return h * h / (2.0 * shape.dim * norm.bounds().c2);
}

namespace {

double l2h(const std::vector<double>& v, double vol) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(vol * s);
}

}  // namespace

ProximalSolver::ProximalSolver(const GridShape& shape, NormSpec norm, const std::vector<std::uint8_t>& mask,
                               double tau, InnerSolverOptions inner)
    : op_(shape, std::move(norm), mask), tau_(tau), inner_(inner) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidSpec("time step must be positive");
  inner_.validate();
  quadratic_ = op_.norm().has_quadratic_energy();
  double s = 0.0;
  for (int a = 0; a < shape.dim; ++a) s += 1.0 / (shape.spacing(a) * shape.spacing(a));
  lipschitz_ = 1.0 / tau + 4.0 * op_.norm().bounds().c2 * s;
}

double ProximalSolver::objective(const std::vector<double>& x, const std::vector<double>& u_prev) const {
  double q = 0.0;
  for (const std::size_t p : op_.free_nodes()) q += (x[p] - u_prev[p]) * (x[p] - u_prev[p]);
  return 0.5 * q / tau_ + op_.energy(x) / op_.shape().cell_volume();
}

ProxResult ProximalSolver::step(const GridFunction& u_prev, const GridFunction* guess) {
  const GridShape& s = op_.shape();
  if (!(u_prev.shape == s)) throw InvalidSpec("proximal step: datum grid does not match the solver grid");
  u_prev.require_finite();
  const std::size_t n = s.size();
  const double vol = s.cell_volume();
  const auto& free = op_.free_nodes();
  const std::vector<double>& up = u_prev.values;

  x_.assign(n, 0.0);
  const std::vector<double>& start = guess ? guess->values : up;
  if (start.size() != n) throw InvalidSpec("proximal step: guess grid does not match");
  for (const std::size_t p : free) x_[p] = start[p];
  x_old_ = x_;
  y_.assign(n, 0.0);
  trial_.assign(n, 0.0);
  trial_lap_.assign(n, 0.0);
  g_.assign(n, 0.0);

  const double target = inner_.tolerance * (1.0 + l2h(up, vol));
  const double mu = 1.0 / tau_;
  double gnorm = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= inner_.max_iters; ++it) {
    // Non-quadratic H² may have a gradient that is only Hölder near the axes, so L is a local estimate
    // that is allowed to relax again once the iterate leaves a stiff region.
    if (!quadratic_) lipschitz_ = std::max(mu, 0.9 * lipschitz_);
    const double q = std::sqrt(mu / lipschitz_);
    const double beta = (1.0 - q) / (1.0 + q);
    for (const std::size_t p : free) y_[p] = x_[p] + beta * (x_[p] - x_old_[p]);
    if (quadratic_) {
      op_.laplacian(y_, lap_);
    } else {
      op_.apply(y_, lap_);
    }
    double gg = 0.0;
    for (const std::size_t p : free) {
      g_[p] = (y_[p] - up[p]) / tau_ - lap_[p];
      gg += g_[p] * g_[p];
    }
    gnorm = std::sqrt(vol * gg);
    if (gnorm <= target) {
      ProxResult r{GridFunction(s, y_), it, gnorm};
      return r;
    }
    for (;;) {
      for (const std::size_t p : free) trial_[p] = y_[p] - g_[p] / lipschitz_;
      if (quadratic_) break;
      // Gradient-difference test; comparing J values loses to roundoff long before the tolerance.
      op_.apply(trial_, trial_lap_);
      double dg = 0.0;
      for (const std::size_t p : free) {
        const double d = (trial_[p] - up[p]) / tau_ - trial_lap_[p] - g_[p];
        dg += d * d;
      }
      if (std::sqrt(dg) <= (1.0 + 1e-9) * std::sqrt(gg)) break;  // ‖trial − y‖ = ‖g‖/L
      lipschitz_ *= 2.0;
      if (lipschitz_ > 1e300) throw ConvergenceError("proximal step: backtracking diverged", objective(y_, up), gnorm);
    }
    double dot = 0.0;
    for (const std::size_t p : free) dot += g_[p] * (trial_[p] - x_[p]);
    if (dot > 0.0) {
      x_old_ = trial_;  // restart: drop the momentum
    } else {
      x_old_.swap(x_);
    }
    x_ = trial_;
  }
  throw ConvergenceError("proximal step did not reach the inner tolerance", objective(x_, up), gnorm);
}

ProxResult proximal_step(const GridFunction& u_prev, const NormSpec& norm, const std::vector<std::uint8_t>& mask,
                         double tau, const InnerSolverOptions& inner) {
  ProximalSolver solver(u_prev.shape, norm, mask, tau, inner);
  return solver.step(u_prev);
}

namespace {

void explicit_update(const FinslerOperator& op, const std::vector<double>& u, double tau, std::vector<double>& lap,
                     std::vector<double>& out) {
  op.laplacian(u, lap);
  out.assign(u.size(), 0.0);
  for (const std::size_t p : op.free_nodes()) out[p] = u[p] + tau * lap[p];
}

void check_explicit(const NormSpec& norm, const GridShape& shape, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidSpec("time step must be positive");
  const double limit = explicit_step_limit(norm, shape);
  if (tau > limit * (1.0 + 1e-12)) {
    throw InvalidSpec("explicit step τ = " + format_double(tau) + " exceeds the stability limit h²/(2N·C₂) = " +
                      format_double(limit));
  }
}

}  // namespace

GridFunction explicit_step(const GridFunction& u_prev, const NormSpec& norm, const std::vector<std::uint8_t>& mask,
                           double tau) {
  check_explicit(norm, u_prev.shape, tau);
  u_prev.require_finite();
  const FinslerOperator op(u_prev.shape, norm, mask);
  std::vector<double> lap;
  GridFunction out(u_prev.shape);
  explicit_update(op, u_prev.values, tau, lap, out.values);
  return out;
}

namespace {

double lambda_weight_factor(double lambda, double t) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidSpec("monitor needs λ > 0");
  if (!(t >= 0.0) || t >= 1.0 / (4.0 * lambda)) throw DomainError("monitor needs 0 <= t < 1/(4λ)");
  return lambda / (1.0 - 4.0 * lambda * t);
}

void check_pair(const GridFunction& u, const GridFunction& h0) {
  if (!(u.shape == h0.shape)) throw InvalidSpec("monitor: H0 field grid does not match");
}

}  // namespace

double monitor_weighted_L2(const GridFunction& u, const GridFunction& h0, double lambda, double t) {
  check_pair(u, h0);
  const double c = lambda_weight_factor(lambda, t);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::isfinite(u[i])) s += std::exp(-2.0 * c * h0[i] * h0[i]) * u[i] * u[i];
  }
  return s * u.shape.cell_volume();
}

double monitor_weighted_L2(const GridFunction& u, const NormSpec& norm, double lambda, double t) {
  return monitor_weighted_L2(u, dual_norm_field(norm, u.shape), lambda, t);
}

double monitor_weighted_L1(const GridFunction& u, const GridFunction& h0, double lambda, double t) {
  check_pair(u, h0);
  const double c = lambda_weight_factor(lambda, t);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::isfinite(u[i])) s += std::exp(-c * h0[i] * h0[i]) * std::abs(u[i]);
  }
  return s * u.shape.cell_volume();
}

double monitor_weighted_L1_local(const GridFunction& u, const GridFunction& h0, const NormSpec& norm, double ell,
                                 double t, int center_stride, const DualEvalConfig& cfg) {
  check_pair(u, h0);
  if (!(ell > 0.0 && ell < 0.5)) throw DomainError("localized monitor needs ℓ in (0, 1/2)");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("localized monitor needs t >= 0");
  if (center_stride < 1) throw InvalidSpec("center stride must be >= 1");
  const GridShape& s = u.shape;
  const int n = s.dim;
  if (norm.dimension() != n) throw InvalidSpec("norm and grid dimensions differ");

  const double factor = 1.0 + std::pow(t, ell);
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] = std::isfinite(u[i]) ? std::exp(-h0[i] * h0[i] * factor) * std::abs(u[i]) : 0.0;
  }

  // Lattice offsets o with H0(o·h) < 1; |x_a| ≤ H(e_a) on the unit H0-ball.
  const DualNorm dual(norm, cfg);
  std::array<int, kMaxGridDimension> reach{};
  for (int a = 0; a < n; ++a) reach[a] = static_cast<int>(std::ceil(norm(Vec::Unit(n, a)) / s.spacing(a)));
  std::vector<std::array<int, kMaxGridDimension>> offsets;
  std::size_t count = 1;
  for (int a = 0; a < n; ++a) count *= static_cast<std::size_t>(2 * reach[a] + 1);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::array<int, kMaxGridDimension> o{};
    Vec x(n);
    std::size_t rest = flat;
    for (int a = n - 1; a >= 0; --a) {
      const std::size_t w = static_cast<std::size_t>(2 * reach[a] + 1);
      o[a] = static_cast<int>(rest % w) - reach[a];
      rest /= w;
      x[a] = o[a] * s.spacing(a);
    }
    if (dual(x) < 1.0) offsets.push_back(o);
  }

  double best = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    const auto ijk = s.unravel(c);
    bool center = true;
    for (int a = 0; a < n; ++a) center = center && ijk[a] % center_stride == 0;
    if (!center) continue;
    double sum = 0.0;
    for (const auto& off : offsets) {
      auto q = ijk;
      bool inside = true;
      for (int a = 0; a < n; ++a) {
        q[a] += off[a];
        inside = inside && q[a] >= 0 && q[a] <= s.cells[a];
      }
      if (inside) sum += w[s.ravel(q)];
    }
    best = std::max(best, sum);
  }
  return best * s.cell_volume();
}

void FlowProblem::validate() const {
  if (norm.dimension() < 1 || norm.dimension() > kMaxGridDimension) throw InvalidSpec("flow needs N = 1, 2, 3");
  if (!(radius >= 1.0) || !std::isfinite(radius)) throw InvalidSpec("domain radius must be >= 1");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidSpec("grid spacing must be positive");
  if (datum.has_value() == measure.has_value()) throw InvalidSpec("give exactly one of a grid datum or a measure");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidSpec("time step must be positive");
  if (!(end_time > 0.0) || !std::isfinite(end_time)) throw InvalidSpec("end time must be positive");
  const double ratio = end_time / tau;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidSpec("end time must be a whole number of time steps");
  }
  if (ratio > 1e8) throw InvalidSpec("too many time steps");
  inner.validate();
  if (!(mollifier_width >= 0.0)) throw InvalidSpec("mollifier width must be >= 0");
  double prev = -1.0;
  for (double st : stamps) {
    if (!(st > prev)) throw InvalidSpec("stamps must be strictly increasing");
    if (st < 0.0 || st > end_time * (1.0 + 1e-12)) throw InvalidSpec("stamps must lie in [0, T]");
    const double k = st / tau;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) throw InvalidSpec("stamps must be multiples of τ");
    prev = st;
  }
  for (double l : monitors.l2_lambdas) {
    if (!(l > 0.0) || end_time >= 1.0 / (4.0 * l)) throw InvalidSpec("weighted L² monitor needs λ > 0 and T < 1/(4λ)");
  }
  for (double l : monitors.l1_lambdas) {
    if (!(l > 0.0) || end_time >= 1.0 / (4.0 * l)) throw InvalidSpec("weighted L¹ monitor needs λ > 0 and T < 1/(4λ)");
  }
  for (double l : monitors.local_ells) {
    if (!(l > 0.0 && l < 0.5)) throw InvalidSpec("localized monitor needs ℓ in (0, 1/2)");
  }
  if (monitors.center_stride < 1) throw InvalidSpec("center stride must be >= 1");
  const GridShape g = grid();
  if (datum && !(datum->shape == g)) throw InvalidSpec("grid datum does not match the domain grid");
  if (measure) {
    measure->validate();
    if (measure->dimension() != norm.dimension()) throw InvalidSpec("measure and norm dimensions differ");
  }
  if (scheme == Scheme::explicit_euler) check_explicit(norm, g, tau);
}

GridShape FlowProblem::grid() const { return domain_grid(norm, radius, spacing); }

int FlowProblem::steps() const { return static_cast<int>(std::llround(end_time / tau)); }

GridFunction FlowProblem::initial(const std::vector<std::uint8_t>& mask) const {
  GridFunction u;
  if (datum) {
    u = *datum;
    u.require_finite();
  } else {
    const GridShape g = grid();
    const double width = mollifier_width > 0.0 ? mollifier_width : 2.0 * g.max_spacing();
    u = mollify(*measure, norm, g, width, dual);
  }
  apply_mask(u, mask);
  return u;
}

namespace {

// Nodes within `layers` lattice steps (any direction) of a fixed node.
std::vector<std::uint8_t> near_fixed(const GridShape& s, const std::vector<std::uint8_t>& mask, int layers) {
  std::vector<std::uint8_t> near(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) near[i] = !mask[i];
  for (int l = 0; l < layers; ++l) {
    std::vector<std::uint8_t> next = near;
    for (int a = 0; a < s.dim; ++a) {
      const std::size_t st = s.stride(a);
      for (std::size_t i = 0; i < near.size(); ++i) {
        if (!near[i]) continue;
        const int ia = s.unravel(i)[a];
        if (ia > 0) next[i - st] = 1;
        if (ia < s.cells[a]) next[i + st] = 1;
      }
    }
    near.swap(next);
  }
  return near;
}

}  // namespace

Trajectory solve(const FlowProblem& problem) {
  problem.validate();
  Trajectory tr;
  tr.shape = problem.grid();
  tr.mask = domain_mask(problem.norm, tr.shape, problem.radius, problem.dual);
  const GridFunction h0 = dual_norm_field(problem.norm, tr.shape, problem.dual);
  const std::vector<std::uint8_t> near = near_fixed(tr.shape, tr.mask, 4);

  for (double l : problem.monitors.l2_lambdas) tr.monitors.push_back({"weighted_l2", l, {}});
  for (double l : problem.monitors.l1_lambdas) tr.monitors.push_back({"weighted_l1", l, {}});
  for (double l : problem.monitors.local_ells) tr.monitors.push_back({"weighted_l1_local", l, {}});

  std::vector<double> stamps = problem.stamps;
  if (stamps.empty()) stamps = {0.0, problem.end_time};
  std::vector<int> stamp_steps;
  for (double st : stamps) stamp_steps.push_back(static_cast<int>(std::llround(st / problem.tau)));
  std::size_t next_stamp = 0;

  const FinslerOperator op(tr.shape, problem.norm, tr.mask);
  std::optional<ProximalSolver> prox;
  if (problem.scheme == Scheme::implicit_proximal) {
    prox.emplace(tr.shape, problem.norm, tr.mask, problem.tau, problem.inner);
  }

  auto record = [&](int k, const GridFunction& u, double psi, int iters) {
    const double t = k * problem.tau;
    tr.times.push_back(t);
    tr.energy.push_back(psi);
    tr.mass.push_back(u.integral());
    tr.min_value.push_back(*std::min_element(u.values.begin(), u.values.end()));
    bool clear = true;
    for (std::size_t i = 0; i < u.size() && clear; ++i) clear = !near[i] || std::abs(u[i]) <= 1e-8;
    tr.support_clear.push_back(clear);
    tr.inner_iterations.push_back(iters);
    for (auto& m : tr.monitors) {
      if (m.name == "weighted_l2") {
        m.values.push_back(monitor_weighted_L2(u, h0, m.parameter, t));
      } else if (m.name == "weighted_l1") {
        m.values.push_back(monitor_weighted_L1(u, h0, m.parameter, t));
      } else {
        m.values.push_back(monitor_weighted_L1_local(u, h0, problem.norm, m.parameter, t,
                                                     problem.monitors.center_stride, problem.dual));
      }
    }
    while (next_stamp < stamp_steps.size() && stamp_steps[next_stamp] == k) {
      tr.stamps.push_back(t);
      tr.slices.push_back(u);
      ++next_stamp;
    }
  };

  GridFunction u = problem.initial(tr.mask);
  GridFunction previous = u;
  std::vector<double> lap;
  record(0, u, op.energy(u.values), 0);

  const int steps = problem.steps();
  for (int k = 1; k <= steps; ++k) {
    GridFunction next;
    int iters = 0;
    if (prox) {
      GridFunction guess = u;
      if (k >= 2) {
        for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = 2.0 * u[i] - previous[i];
      }
      try {
        ProxResult r = prox->step(u, &guess);
        next = std::move(r.u);
        iters = r.iterations;
      } catch (const ConvergenceError& e) {
        tr.completed = false;
        tr.diagnostic = "step " + std::to_string(k) + " (t = " + format_double(k * problem.tau) + "): " + e.what() +
                        "; gradient norm " + format_double(e.residual());
        break;
      }
    } else {
      next = GridFunction(tr.shape);
      explicit_update(op, u.values, problem.tau, lap, next.values);
    }
    previous = std::move(u);
    u = std::move(next);
    record(k, u, op.energy(u.values), iters);
  }
  return tr;
}

InvariantReport check_invariants(const Trajectory& tr) {
  InvariantReport rep;
  if (tr.times.empty()) return rep;
  rep.max_energy_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < tr.energy.size(); ++k) {
    rep.max_energy_increase = std::max(rep.max_energy_increase, tr.energy[k] - tr.energy[k - 1]);
  }
  if (tr.energy.size() < 2) rep.max_energy_increase = 0.0;
  rep.nonnegative_datum = tr.min_value.front() >= 0.0;
  rep.min_value = *std::min_element(tr.min_value.begin(), tr.min_value.end());
  for (std::size_t k = 0; k < tr.mass.size() && tr.support_clear[k]; ++k) {
    rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(tr.mass[k] - tr.mass.front()));
  }
  for (const auto& m : tr.monitors) {
    if (m.values.empty()) continue;
    if (m.name == "weighted_l2") {
      double excess = -std::numeric_limits<double>::infinity();
      for (double v : m.values) excess = std::max(excess, v - m.values.front());
      rep.l2_lambdas.push_back(m.parameter);
      rep.l2_excess.push_back(excess);
    } else if (m.name == "weighted_l1_local" && m.values.front() > 0.0) {
      for (double v : m.values) rep.local_ratio = std::max(rep.local_ratio, v / m.values.front());
    }
  }
  return rep;
}

namespace {

// Index on `to` of the node of `from` with lattice coordinates scaled by k; both grids are
// centred on the origin with the same spacing. Returns size() of `to` when outside.
std::size_t scaled_index(const GridShape& from, std::size_t i, int k, const GridShape& to) {
  const auto ijk = from.unravel(i);
  std::array<int, kMaxGridDimension> q{};
  for (int a = 0; a < from.dim; ++a) {
    q[a] = k * (ijk[a] - from.cells[a] / 2) + to.cells[a] / 2;
    if (q[a] < 0 || q[a] > to.cells[a]) return to.size();
  }
  return to.ravel(q);
}

Trajectory run_final(FlowProblem p) {
  p.stamps = {p.end_time};
  p.monitors = {};
  Trajectory tr = solve(p);
  if (!tr.completed) throw ConvergenceError("flow did not complete: " + tr.diagnostic, 0.0, 0.0);
  return tr;
}

}  // namespace

ScalingReport scaling_check(const FlowProblem& base, int k, bool amplitude) {
  if (k < 1) throw InvalidSpec("scaling factor k must be a positive integer");
  base.validate();
  if (base.radius / k < 1.0) throw InvalidSpec("scaling check needs R/k >= 1");
  const GridShape gb = base.grid();
  const auto mask_b = domain_mask(base.norm, gb, base.radius, base.dual);
  const GridFunction phi = base.initial(mask_b);

  FlowProblem pb = base;
  pb.datum = phi;
  pb.measure.reset();
  const Trajectory tb = run_final(pb);
  const GridFunction& ub = tb.slices.back();

  FlowProblem pk = pb;
  pk.radius = base.radius / k;
  pk.tau = base.tau / (k * k);
  pk.end_time = base.end_time / (k * k);
  const GridShape gk = pk.grid();
  GridFunction phik(gk);
  for (std::size_t i = 0; i < gk.size(); ++i) {
    const std::size_t j = scaled_index(gk, i, k, gb);
    if (j < gb.size()) phik[i] = phi[j];
  }
  pk.datum = phik;
  const Trajectory tk = run_final(pk);
  const GridFunction& uk = tk.slices.back();

  ScalingReport rep;
  rep.k = k;
  rep.max_energy_increase = std::max(check_invariants(tb).max_energy_increase, check_invariants(tk).max_energy_increase);
  for (std::size_t i = 0; i < gk.size(); ++i) {
    if (!tk.mask[i]) continue;
    const std::size_t j = scaled_index(gk, i, k, gb);
    const double other = j < gb.size() ? ub[j] : 0.0;
    rep.defect = std::max(rep.defect, std::abs(uk[i] - other));
    ++rep.samples;
  }

  rep.amplitude_defect = std::numeric_limits<double>::quiet_NaN();
  if (amplitude && base.scheme == Scheme::implicit_proximal) {
    FlowProblem p2 = pb;
    GridFunction twice = phi;
    for (double& v : twice.values) v *= 2.0;
    p2.datum = twice;
    const Trajectory t2 = run_final(p2);
    rep.max_energy_increase = std::max(rep.max_energy_increase, check_invariants(t2).max_energy_increase);
    rep.amplitude_defect = 0.0;
    for (std::size_t i = 0; i < gb.size(); ++i) {
      rep.amplitude_defect = std::max(rep.amplitude_defect, std::abs(t2.slices.back()[i] - 2.0 * ub[i]));
    }
  }
  return rep;
}

NestedReport nested_domain_study(const MeasureSpec& mu, const std::vector<double>& radii, const NormSpec& norm,
                                 double lambda, const NestedOptions& options) {
  mu.validate();
  if (mu.dimension() != norm.dimension()) throw InvalidSpec("measure and norm dimensions differ");
  if (radii.size() < 2) throw InvalidSpec("nested study needs at least two radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > options.core_radius) || !(radii[i] >= 1.0)) {
      throw InvalidSpec("nested radii must be >= 1 and exceed the core radius");
    }
    if (i > 0 && !(radii[i] > radii[i - 1])) throw InvalidSpec("nested radii must be increasing");
  }
  if (!(lambda > 0.0)) throw InvalidSpec("nested study needs λ > 0");
  if (options.end_time >= 1.0 / (4.0 * lambda)) throw InvalidSpec("nested study needs T < 1/(4λ)");
  if (!(options.window_start >= 0.0 && options.window_start <= options.end_time)) {
    throw InvalidSpec("core time window must lie in [0, T]");
  }

  const auto g1 = growth_functional(mu, lambda, norm, radii[radii.size() - 2], options.sampling, options.dual);
  const auto g2 = growth_functional(mu, lambda, norm, radii.back(), options.sampling, options.dual);
  if (std::isfinite(g2.log_value)) {
    if (!std::isfinite(g1.log_value) || std::abs(std::expm1(g2.log_value - g1.log_value)) > 1e-3) {
      throw InvalidSpec("datum does not satisfy the growth condition for λ = " + format_double(lambda));
    }
  }

  std::vector<double> stamps;
  FlowProblem base;
  base.norm = norm;
  base.spacing = options.spacing;
  base.tau = options.tau;
  base.end_time = options.end_time;
  base.inner = options.inner;
  base.dual = options.dual;
  for (int k = 0; k <= base.steps(); ++k) {
    if (k * options.tau >= options.window_start - 1e-12 * options.end_time) stamps.push_back(k * options.tau);
  }
  base.stamps = stamps;

  std::vector<Trajectory> runs;
  for (double m : radii) {
    FlowProblem p = base;
    p.radius = m;
    const GridShape g = p.grid();
    GridFunction u = mollify(mu, norm, g, 2.0 * g.max_spacing(), options.dual);
    const GridFunction h0 = dual_norm_field(norm, g, options.dual);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= smooth_cutoff(h0[i], m);
    p.datum = std::move(u);
    Trajectory tr = solve(p);
    if (!tr.completed) throw ConvergenceError("nested study flow did not complete: " + tr.diagnostic, 0.0, 0.0);
    runs.push_back(std::move(tr));
  }

  NestedReport rep;
  rep.radii = radii;
  for (const Trajectory& tr : runs) {
    rep.max_energy_increase = std::max(rep.max_energy_increase, check_invariants(tr).max_energy_increase);
  }
  for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
    const GridShape& a = runs[r].shape;
    const GridShape& b = runs[r + 1].shape;
    const GridFunction h0 = dual_norm_field(norm, a, options.dual);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (h0[i] > options.core_radius) continue;
      const std::size_t j = scaled_index(a, i, 1, b);
      for (std::size_t s = 0; s < runs[r].slices.size(); ++s) {
        diff = std::max(diff, std::abs(runs[r].slices[s][i] - runs[r + 1].slices[s][j]));
      }
    }
    rep.differences.push_back(diff);
  }
  for (std::size_t i = 1; i < rep.differences.size(); ++i) {
    const bool both_zero = rep.differences[i] == 0.0 && rep.differences[i - 1] == 0.0;
    rep.decreasing = rep.decreasing && (rep.differences[i] < rep.differences[i - 1] || both_zero);
  }
  return rep;
}

}  // namespace finsler
