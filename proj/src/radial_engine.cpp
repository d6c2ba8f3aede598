#include "finsler/radial_engine.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace finsler {

std::string_view to_string(QuadratureKind kind) {
  return kind == QuadratureKind::gauss_legendre ? "gauss_legendre" : "chebyshev_gauss";
}

QuadratureKind quadrature_kind_from_string(std::string_view name) {
  if (name == "gauss_legendre") return QuadratureKind::gauss_legendre;
  if (name == "chebyshev_gauss") return QuadratureKind::chebyshev_gauss;
  throw InvalidSpec("unknown quadrature kind: " + std::string(name));
}

QuadratureRule QuadratureRule::gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidSpec("quadrature needs at least one node");
  if (!(b > a)) throw InvalidSpec("quadrature interval must satisfy a < b");
  QuadratureRule q;
  q.kind = QuadratureKind::gauss_legendre;
  q.a = a;
  q.b = b;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n from the Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = mid - half * x;
    q.nodes[n - 1 - i] = mid + half * x;
    q.weights[i] = q.weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = mid;
  return q;
}

QuadratureRule QuadratureRule::chebyshev_gauss(int n) {
  if (n < 1) throw InvalidSpec("quadrature needs at least one node");
  QuadratureRule q;
  q.kind = QuadratureKind::chebyshev_gauss;
  for (int i = 0; i < n; ++i) {
    q.nodes.push_back(-std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * n)));
    q.weights.push_back(std::numbers::pi / n);
  }
  return q;
}

double QuadratureRule::measure() const {
  return kind == QuadratureKind::chebyshev_gauss ? std::numbers::pi : b - a;
}

void QuadratureRule::validate() const {
  if (size() < 8) throw InvalidSpec("quadrature rule needs at least 8 nodes");
  if (nodes.size() != weights.size()) throw InvalidSpec("quadrature nodes and weights differ in length");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidSpec("quadrature weights must be positive");
    sum += w;
  }
  if (std::abs(sum - measure()) > 1e-12 * std::max(1.0, measure())) {
    throw InvalidSpec("quadrature weights do not sum to the interval measure");
  }
}

SphereIntegralConfig SphereIntegralConfig::defaults(int dimension) {
  SphereIntegralConfig c;
  c.dimension = dimension;
  c.rule = dimension % 2 == 0 ? QuadratureRule::chebyshev_gauss(64) : QuadratureRule::gauss_legendre(64);
  return c;
}

void SphereIntegralConfig::validate() const {
  if (dimension < 1) throw InvalidSpec("sphere integral needs N >= 1");
  if (series_terms < 20) throw InvalidSpec("sphere integral needs series_terms >= 20");
  if (dimension == 1) return;
  rule.validate();
  if (dimension == 2 && rule.kind != QuadratureKind::chebyshev_gauss) {
    throw InvalidSpec("N = 2 needs the chebyshev_gauss rule for the (1−t²)^{-1/2} endpoint weight");
  }
  if (rule.kind == QuadratureKind::gauss_legendre && (rule.a != -1.0 || rule.b != 1.0)) {
    throw InvalidSpec("sphere integral rule must live on [-1, 1]");
  }
}

double sphere_measure(int n) {
  if (n < 0) throw InvalidSpec("sphere dimension must be >= 0");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

namespace {

// ∫_0^π e^{z(cosθ−1)} sin^{N−2}θ dθ on panels of width ~1/√z, cut where e^{z(cosθ−1)} < e^{−40}.
double theta_panels(double z, int dimension) {
  static const QuadratureRule g = QuadratureRule::gauss_legendre(16, 0.0, 1.0);
  const double s = std::sqrt(20.0 / z);
  const double end = s < 1.0 ? 2.0 * std::asin(s) : std::numbers::pi;
  const double width = std::min(end, 1.0 / std::sqrt(z));
  const int panels = static_cast<int>(std::ceil(end / width));
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = end * p / panels, len = end / panels;
    for (int i = 0; i < g.size(); ++i) {
      const double th = lo + len * g.nodes[i];
      sum += len * g.weights[i] * std::exp(z * (std::cos(th) - 1.0)) *
             std::pow(std::sin(th), dimension - 2);
    }
  }
  return sum;
}

}  // namespace

double sphere_integral_I_scaled(double z, const SphereIntegralConfig& cfg) {
  cfg.validate();
  if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("sphere integral needs finite z >= 0");
  const int n = cfg.dimension;
  if (n == 1) return 1.0 + std::exp(-2.0 * z);
  const double omega = sphere_measure(n - 2);
  if (z > 0.5 * cfg.rule.size()) return omega * theta_panels(z, n);
  double sum = 0.0;
  for (int i = 0; i < cfg.rule.size(); ++i) {
    const double t = cfg.rule.nodes[i];
    const double shape = cfg.rule.kind == QuadratureKind::chebyshev_gauss
                             ? std::pow(1.0 - t * t, 0.5 * (n - 2))
                             : std::pow(1.0 - t * t, 0.5 * (n - 3));
    sum += cfg.rule.weights[i] * std::exp(z * (t - 1.0)) * shape;
  }
  return omega * sum;
}

double sphere_integral_I(double z, const SphereIntegralConfig& cfg) {
  if (z > 700.0) throw RangeError("sphere integral overflows for z > 700; use the scaled form", 700.0);
  return std::exp(z) * sphere_integral_I_scaled(z, cfg);
}

double bessel_I0(double z, int terms) {
  if (terms < 1) throw InvalidSpec("bessel_I0 needs at least one term");
  const double q = 0.25 * z * z;
  double term = 1.0, sum = 1.0;
  for (int n = 1; n < terms; ++n) {
    term *= q / (static_cast<double>(n) * n);
    sum += term;
  }
  return sum;
}

double bessel_I0_scaled(double z) {
  z = std::abs(z);
  if (z <= 30.0) return std::exp(-z) * bessel_I0(z, 120);
  // e^{-z}I₀(z) ~ (2πz)^{-1/2} Σ_k [(2k−1)!!]² / (k! 8^k z^k)
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * z);
    if (next < 1e-17 * sum || next > term) break;
    term = next;
    sum += term;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

double radial_heat_solution_at(const RadialProfile& phi, int dimension, double r, double t,
                               const SphereIntegralConfig& cfg, const RadialSolveOptions& opts) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("representation formula needs t > 0");
  if (!(r >= 0.0)) throw DomainError("representation formula needs H0(x) >= 0");
  if (cfg.dimension != dimension) throw InvalidSpec("sphere integral dimension mismatch");
  cfg.validate();
  if (opts.nodes_per_panel < 8) throw InvalidSpec("radial solve needs at least 8 nodes per panel");

  const double reach = std::sqrt(4.0 * t * std::log(1e16));
  const double lo = std::max(0.0, r - reach);
  const double hi = std::min(phi.r_max(), r + reach);
  if (hi < r + reach) {
    double sup = 0.0;
    for (double v : phi.values()) sup = std::max(sup, std::abs(v));
    const double tail = sup * std::exp(-(hi - r) * (hi - r) / (4.0 * t));
    if (tail > opts.tail_tolerance) throw RangeError("Gaussian tail beyond the profile is not negligible", tail);
  }
  if (!(hi > lo)) return 0.0;

  auto i_scaled = [&](double z) {
    if (dimension == 2) return 2.0 * std::numbers::pi * bessel_I0_scaled(z);
    return sphere_integral_I_scaled(z, cfg);
  };
  const QuadratureRule g = QuadratureRule::gauss_legendre(opts.nodes_per_panel, 0.0, 1.0);
  auto integrate = [&](int panels) {
    double sum = 0.0;
    const double len = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      for (int i = 0; i < g.size(); ++i) {
        const double rho = lo + len * (p + g.nodes[i]);
        const double d = r - rho;
        sum += len * g.weights[i] * i_scaled(r * rho / (2.0 * t)) * std::exp(-d * d / (4.0 * t)) *
               phi(rho) * std::pow(rho, dimension - 1);
      }
    }
    return sum * std::pow(4.0 * std::numbers::pi * t, -0.5 * dimension);
  };

  int panels = std::max(1, static_cast<int>(std::ceil(hi - lo)));
  double prev = integrate(panels), gap = 0.0;
  for (int k = 0; k < opts.max_doublings; ++k) {
    panels *= 2;
    const double cur = integrate(panels);
    gap = std::abs(cur - prev);
    if (gap <= opts.tolerance * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw ConvergenceError("representation formula quadrature did not settle", prev, gap);
}

double radial_heat_solution(const RadialProfile& phi, const NormSpec& norm, const Vec& x, double t,
                            const SphereIntegralConfig& cfg, const RadialSolveOptions& opts,
                            const DualEvalConfig& dual) {
  return radial_heat_solution_at(phi, norm.dimension(), dual_norm_eval(norm, x, dual), t, cfg, opts);
}

}  // namespace finsler
