#include "finsler/exact_solutions.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace finsler {

std::string_view to_string(SolutionKind kind) {
  switch (kind) {
    case SolutionKind::gauss_kernel: return "gauss_kernel";
    case SolutionKind::blowup: return "blowup";
    case SolutionKind::barenblatt: return "barenblatt";
    case SolutionKind::talenti: return "talenti";
    case SolutionKind::singular_poly: return "singular_poly";
  }
  return "?";
}

SolutionKind solution_kind_from_string(std::string_view name) {
  for (auto k : {SolutionKind::gauss_kernel, SolutionKind::blowup, SolutionKind::barenblatt,
                 SolutionKind::talenti, SolutionKind::singular_poly}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidSpec("unknown solution kind: " + std::string(name));
}

SolutionSpec SolutionSpec::gauss_kernel(NormSpec norm) {
  SolutionSpec s;
  s.kind = SolutionKind::gauss_kernel;
  s.norm = std::move(norm);
  s.validate();
  return s;
}

SolutionSpec SolutionSpec::blowup(NormSpec norm, double lambda) {
  SolutionSpec s;
  s.kind = SolutionKind::blowup;
  s.norm = std::move(norm);
  s.lambda = lambda;
  s.validate();
  return s;
}

SolutionSpec SolutionSpec::barenblatt(NormSpec norm, double m, double C) {
  SolutionSpec s;
  s.kind = SolutionKind::barenblatt;
  s.norm = std::move(norm);
  s.m = m;
  s.C = C;
  s.validate();
  return s;
}

SolutionSpec SolutionSpec::talenti(NormSpec norm, double p, double A, double B) {
  SolutionSpec s;
  s.kind = SolutionKind::talenti;
  s.norm = std::move(norm);
  s.p = p;
  s.A = A;
  s.B = B;
  s.validate();
  return s;
}

SolutionSpec SolutionSpec::singular_poly(NormSpec norm, int m_order) {
  SolutionSpec s;
  s.kind = SolutionKind::singular_poly;
  s.norm = std::move(norm);
  s.m_order = m_order;
  s.validate();
  return s;
}

void SolutionSpec::validate() const {
  switch (kind) {
    case SolutionKind::gauss_kernel:
      break;
    case SolutionKind::blowup:
      if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidSpec("blowup needs Λ > 0");
      break;
    case SolutionKind::barenblatt:
      if (!(m > 1.0) || !std::isfinite(m)) throw InvalidSpec("barenblatt needs m > 1");
      if (!(C > 0.0) || !std::isfinite(C)) throw InvalidSpec("barenblatt needs C > 0");
      break;
    case SolutionKind::talenti:
      if (!(p > 1.0) || !std::isfinite(p)) throw InvalidSpec("talenti needs p > 1");
      if (!(A > 0.0) || !(B > 0.0)) throw InvalidSpec("talenti needs A > 0 and B > 0");
      break;
    case SolutionKind::singular_poly:
      if (m_order < 1) throw InvalidSpec("singular_poly needs m_order >= 1");
      break;
  }
}

double SolutionSpec::max_time() const {
  if (kind == SolutionKind::blowup) return 1.0 / (4.0 * lambda);
  return std::numeric_limits<double>::infinity();
}

std::string SolutionSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case SolutionKind::blowup: os << "(lambda=" << lambda << ")"; break;
    case SolutionKind::barenblatt: os << "(m=" << m << ",C=" << C << ")"; break;
    case SolutionKind::talenti: os << "(p=" << p << ",A=" << A << ",B=" << B << ")"; break;
    case SolutionKind::singular_poly: os << "(m_order=" << m_order << ")"; break;
    default: break;
  }
  return os.str();
}

BarenblattExponents barenblatt_exponents(int dimension, double m) {
  const double n = dimension;
  const double alpha = n / (n * (m - 1.0) + 2.0);
  return {alpha, alpha / n, alpha * (m - 1.0) / (2.0 * m * n)};
}

namespace {

bool log_branch(int n, int m_order) {
  const int d = n - 2 * m_order;
  return d <= 0 && d % 2 == 0;
}

void check_time(const SolutionSpec& s, double t) {
  if (s.stationary()) return;
  if (!std::isfinite(t)) throw DomainError("time must be finite");
  if (s.kind == SolutionKind::blowup) {
    if (t < 0.0 || t >= s.max_time()) throw DomainError("blowup is defined for 0 <= t < 1/(4Λ)");
  } else if (!(t > 0.0)) {
    throw DomainError(std::string(to_string(s.kind)) + " is defined for t > 0");
  }
}

}  // namespace

double eval_profile(const SolutionSpec& s, double r, double t) {
  check_time(s, t);
  const int n = s.dimension();
  switch (s.kind) {
    case SolutionKind::gauss_kernel:
      return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-r * r / (4.0 * t));
    case SolutionKind::blowup: {
      const double q = 1.0 - 4.0 * s.lambda * t;
      return std::pow(q, -0.5 * n) * std::exp(s.lambda * r * r / q);
    }
    case SolutionKind::barenblatt: {
      const auto e = barenblatt_exponents(n, s.m);
      const double core = s.C - e.k * r * r * std::pow(t, -2.0 * e.beta);
      if (core <= 0.0) return 0.0;
      return std::pow(t, -e.alpha) * std::pow(core, 1.0 / (s.m - 1.0));
    }
    case SolutionKind::talenti:
      return std::pow(s.A + s.B * std::pow(r, s.p / (s.p - 1.0)), 1.0 - n / s.p);
    case SolutionKind::singular_poly: {
      if (r == 0.0) throw DomainError("singular_poly is singular at x = 0");
      const double v = std::pow(r, 2.0 * s.m_order - n);
      return log_branch(n, s.m_order) ? v * std::log(r) : v;
    }
  }
  return 0.0;
}

double eval_solution(const SolutionSpec& s, const Vec& x, double t, const DualEvalConfig& cfg) {
  check_dimension(s.norm, x);
  return eval_profile(s, dual_norm_eval(s.norm, x, cfg), t);
}

GridFunction eval_on_grid(const SolutionSpec& s, const GridFunction& h0, double t) {
  GridFunction out(h0.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = eval_profile(s, h0[i], t);
  return out;
}

ResidualLevel pde_residual(const SolutionSpec& s, const GridShape& shape, double t, double dt,
                           const ResidualWindow& window) {
  s.validate();
  if (shape.dim != s.dimension()) throw InvalidSpec("grid and norm dimensions differ");
  const GridFunction h0 = dual_norm_field(s.norm, shape);
  ResidualLevel lvl;
  lvl.h = shape.max_spacing();
  lvl.dt = s.stationary() ? 0.0 : dt;

  GridFunction residual(shape);
  std::vector<std::uint8_t> scored(shape.size(), 1);
  switch (s.kind) {
    case SolutionKind::gauss_kernel:
    case SolutionKind::blowup:
    case SolutionKind::barenblatt: {
      if (!(dt > 0.0) || !(t - dt > 0.0 || (s.kind == SolutionKind::blowup && t - dt >= 0.0))) {
        throw DomainError("pde_residual needs 0 < t − dt");
      }
      const GridFunction up = eval_on_grid(s, h0, t + dt);
      const GridFunction um = eval_on_grid(s, h0, t - dt);
      GridFunction u = eval_on_grid(s, h0, t);
      if (s.kind == SolutionKind::barenblatt) {
        for (double& v : u.values) v = std::pow(v, s.m);
        const auto e = barenblatt_exponents(s.dimension(), s.m);
        auto front = [&](double tt) { return std::sqrt(s.C / e.k) * std::pow(tt, e.beta); };
        const double band = window.free_boundary_band * lvl.h + front(t + dt) - front(t - dt);
        for (std::size_t i = 0; i < shape.size(); ++i) {
          if (std::abs(h0[i] - front(t)) < band) scored[i] = 0;
        }
      }
      const GridFunction lap = finsler_laplacian(u, s.norm);
      for (std::size_t i = 0; i < shape.size(); ++i) {
        residual[i] = (up[i] - um[i]) / (2.0 * dt) - lap[i];
      }
      break;
    }
    case SolutionKind::talenti: {
      const GridFunction w = eval_on_grid(s, h0, 0.0);
      const GridFunction lap = finsler_laplacian(w, s.norm);
      for (std::size_t i = 0; i < shape.size(); ++i) residual[i] = -lap[i] - std::pow(w[i], s.p);
      break;
    }
    case SolutionKind::singular_poly: {
      const auto rep = singular_poly_check(s, shape, window.r_min, window.r_max);
      lvl.max_residual = rep.max_residual;
      lvl.mean_residual = std::numeric_limits<double>::quiet_NaN();
      lvl.nodes = rep.nodes;
      return lvl;
    }
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!scored[i] || shape.on_boundary(i) || h0[i] < window.r_min || h0[i] > window.r_max) continue;
    const double r = std::abs(residual[i]);
    lvl.max_residual = std::max(lvl.max_residual, r);
    sum += r;
    ++lvl.nodes;
  }
  lvl.mean_residual = lvl.nodes ? sum / static_cast<double>(lvl.nodes) : 0.0;
  return lvl;
}

ResidualReport residual_study(const SolutionSpec& s, const GridShape& shape, double t, double dt,
                              int refinements, const ResidualWindow& window) {
  ResidualReport rep;
  GridShape g = shape;
  for (int level = 0; level <= refinements; ++level, g = g.refined(), dt *= 0.5) {
    rep.levels.push_back(pde_residual(s, g, t, dt, window));
  }
  if (rep.levels.size() < 2) {
    rep.order = std::numeric_limits<double>::quiet_NaN();
  } else {
    const auto& c = rep.levels[rep.levels.size() - 2];
    const auto& f = rep.levels.back();
    rep.order = std::log(c.max_residual / f.max_residual) / std::log(c.h / f.h);
  }
  return rep;
}

SingularReport singular_poly_check(const SolutionSpec& s, const GridShape& shape, double r_min,
                                   double r_max) {
  if (s.kind != SolutionKind::singular_poly) throw InvalidSpec("singular_poly_check needs singular_poly");
  s.validate();
  const GridFunction h0 = dual_norm_field(s.norm, shape);
  GridFunction w(shape);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = h0[i] > 0.0 ? eval_profile(s, h0[i], 0.0) : 0.0;
  for (int k = 0; k < s.m_order; ++k) {
    w = finsler_laplacian(w, s.norm);
    for (double& v : w.values) {
      if (!std::isfinite(v)) v = 0.0;
    }
  }
  SingularReport rep;
  rep.h = shape.max_spacing();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (h0[i] < r_min || h0[i] > r_max) continue;
    const auto ijk = shape.unravel(i);
    bool clear = true;
    for (int a = 0; a < shape.dim; ++a) {
      clear = clear && ijk[a] >= s.m_order && ijk[a] <= shape.cells[a] - s.m_order;
    }
    if (!clear) continue;
    rep.max_residual = std::max(rep.max_residual, std::abs(w[i]));
    ++rep.nodes;
  }
  return rep;
}

}  // namespace finsler
