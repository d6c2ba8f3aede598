#include "finsler/dual.hpp"

#include "finsler/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace finsler {
namespace {

SphereSearchResult search_dual(const NormSpec& norm, const Vec& x, const DualEvalConfig& cfg) {
  auto ratio = [&](const Vec& xi) { return x.dot(xi) / norm(xi); };
  auto result = maximize_on_sphere(ratio, norm.dimension(), cfg.search_options());
  if (!result.converged) {
    throw ConvergenceError("dual norm refinement did not converge", result.value, result.gap);
  }
  return result;
}

}  // namespace

void DualEvalConfig::validate(int dimension) const {
  if (!(tolerance > 0.0)) throw InvalidSpec("dual eval tolerance must be > 0");
  if (sphere_samples < 2 * dimension) throw InvalidSpec("dual eval needs sphere_samples >= 2N");
  if (refinement_iters < 1) throw InvalidSpec("dual eval needs refinement_iters >= 1");
}

SphereSearchOptions DualEvalConfig::search_options() const {
  SphereSearchOptions o;
  o.samples = sphere_samples;
  o.refinement_iters = refinement_iters;
  o.tolerance = tolerance;
  o.seed = seed;
  return o;
}

double dual_norm_eval(const NormSpec& norm, const Vec& x, const DualEvalConfig& cfg) {
  check_dimension(norm, x);
  cfg.validate(norm.dimension());
  if (x.norm() == 0.0) return 0.0;
  if (cfg.method == DualMethod::closed_form) {
    if (auto dual = norm.closed_form_dual()) return (*dual)(x);
  }
  return std::max(0.0, search_dual(norm, x, cfg).value);
}

Vec grad_dual_norm(const NormSpec& norm, const Vec& x, const DualEvalConfig& cfg) {
  check_dimension(norm, x);
  cfg.validate(norm.dimension());
  if (x.norm() == 0.0) throw DomainError("gradient of H0 is undefined at 0");
  if (cfg.method == DualMethod::closed_form) {
    if (auto dual = norm.closed_form_dual()) return dual->gradient(x);
  }
  const auto r = search_dual(norm, x, cfg);
  return r.argmax / norm(r.argmax);
}

double bidual_norm_eval(const NormSpec& norm, const Vec& xi, const DualEvalConfig& cfg) {
  check_dimension(norm, xi);
  if (xi.norm() == 0.0) return 0.0;
  DualEvalConfig inner = cfg;
  inner.method = DualMethod::sphere_maximization;
  auto ratio = [&](const Vec& x) { return xi.dot(x) / dual_norm_eval(norm, x, inner); };
  const auto r = maximize_on_sphere(ratio, norm.dimension(), cfg.search_options());
  if (!r.converged) throw ConvergenceError("bidual refinement did not converge", r.value, r.gap);
  return r.value;
}

DualNorm::DualNorm(NormSpec norm, DualEvalConfig cfg) : norm_(std::move(norm)), cfg_(cfg) {
  cfg_.validate(norm_.dimension());
  if (cfg_.method == DualMethod::closed_form) dual_ = norm_.closed_form_dual();
}

double DualNorm::operator()(const Vec& x) const {
  if (dual_) return (*dual_)(x);
  return dual_norm_eval(norm_, x, cfg_);
}

Vec DualNorm::gradient(const Vec& x) const {
  if (dual_) return dual_->gradient(x);
  return grad_dual_norm(norm_, x, cfg_);
}

IdentityReport verify_identities(const NormSpec& norm, int sample_count,
                                 const DualEvalConfig& cfg, std::uint64_t seed) {
  if (sample_count < 1) throw InvalidSpec("verify_identities needs at least one sample");
  const DualNorm h0(norm, cfg);
  const int dim = norm.dimension();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t_dist(-3.0, 3.0);

  IdentityReport r;
  r.samples = sample_count;
  r.numeric_dual = !h0.closed_form();
  r.c1 = norm.bounds().c1;
  r.c2 = norm.bounds().c2;
  r.min_coercivity = std::numeric_limits<double>::infinity();

  for (int k = 0; k < sample_count; ++k) {
    const Vec xi = random_vector(dim, rng);
    const Vec x = random_vector(dim, rng);
    double t = t_dist(rng);
    if (std::abs(t) < 1e-3) t = 1.0;

    const double h_xi = norm(xi);
    const double h0_x = h0(x);
    const double denom = h0_x * h_xi;
    r.duality_inequality = std::max(r.duality_inequality, (std::abs(x.dot(xi)) - denom) / denom);

    const Vec g = norm.gradient(xi);
    const Vec g0 = h0.gradient(x);
    r.primal_euler = std::max(r.primal_euler, std::abs(xi.dot(g) - h_xi) / h_xi);
    r.dual_euler = std::max(r.dual_euler, std::abs(x.dot(g0) - h0_x) / h0_x);
    r.duality_equality = std::max(r.duality_equality,
                                  std::abs(x.dot(g0) - h0_x * norm(g0)) / h0_x);
    r.sign_rule = std::max(r.sign_rule, (norm.gradient(Vec(t * xi)) - (t > 0 ? 1.0 : -1.0) * g).norm());

    r.primal_unit = std::max(r.primal_unit, std::abs(h0(g) - 1.0));
    r.dual_unit = std::max(r.dual_unit, std::abs(norm(g0) - 1.0));
    r.primal_inversion =
        std::max(r.primal_inversion, (h_xi * h0.gradient(g) - xi).norm() / xi.norm());
    r.dual_inversion =
        std::max(r.dual_inversion, (h0_x * norm.gradient(g0) - x).norm() / x.norm());

    const Vec a = norm.duality_map(xi);
    r.map_square = std::max(r.map_square, std::abs(a.dot(xi) - h_xi * h_xi) / (h_xi * h_xi));
    r.map_dual = std::max(r.map_dual, std::abs(h0(a) - h_xi) / h_xi);
    r.min_coercivity = std::min(r.min_coercivity, a.dot(xi) / xi.squaredNorm());
    r.max_growth = std::max(r.max_growth, a.norm() / xi.norm());
  }
  r.duality_inequality = std::max(0.0, r.duality_inequality);
  return r;
}

}  // namespace finsler
