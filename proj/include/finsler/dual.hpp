#pragma once

#include "finsler/norm.hpp"
#include "finsler/sphere_search.hpp"

#include <cstdint>

namespace finsler {

enum class DualMethod { closed_form, sphere_maximization };

/// How H0 is evaluated. `closed_form` uses the family's dual when it has one and
/// silently falls back to sphere maximization otherwise.
struct DualEvalConfig {
  DualMethod method = DualMethod::closed_form;
  int sphere_samples = 720;
  int refinement_iters = 20;
  double tolerance = 1e-12;
  std::uint64_t seed = 0x5eedULL;

  void validate(int dimension) const;
  SphereSearchOptions search_options() const;
};

/// H0(x) = sup_{ξ≠0} x·ξ / H(ξ). Throws ConvergenceError (best value, gap) when the
/// numeric refinement does not settle.
double dual_norm_eval(const NormSpec& norm, const Vec& x, const DualEvalConfig& cfg = {});

/// ∇H0(x). On the numeric path this is ξ*/H(ξ*) for the maximizer ξ* of x·ξ/H(ξ).
Vec grad_dual_norm(const NormSpec& norm, const Vec& x, const DualEvalConfig& cfg = {});

/// sup_{x≠0} ξ·x / H0(x) with H0 computed numerically: the dual of the dual.
double bidual_norm_eval(const NormSpec& norm, const Vec& xi, const DualEvalConfig& cfg);

/// Callable view of H0 that resolves the evaluation path once.
class DualNorm {
 public:
  DualNorm(NormSpec norm, DualEvalConfig cfg = {});
  double operator()(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  const NormSpec& primal() const { return norm_; }
  bool closed_form() const { return dual_.has_value(); }

 private:
  NormSpec norm_;
  DualEvalConfig cfg_;
  std::optional<NormSpec> dual_;
};

/// Maximum violations of the convex-duality identities over random samples.
struct IdentityReport {
  int samples = 0;
  bool numeric_dual = false;
  double duality_inequality = 0.0;  // (|x·ξ| − H0(x)H(ξ))_+ / (H0(x)H(ξ))
  double duality_equality = 0.0;    // |x·∇H0(x) − H0(x)| / H0(x), the equality case of the inequality
  double primal_unit = 0.0;         // |H0(∇H(ξ)) − 1|
  double dual_unit = 0.0;           // |H(∇H0(x)) − 1|
  double primal_inversion = 0.0;    // |H(ξ)∇H0(∇H(ξ)) − ξ| / |ξ|
  double dual_inversion = 0.0;      // |H0(x)∇H(∇H0(x)) − x| / |x|
  double primal_euler = 0.0;        // |ξ·∇H(ξ) − H(ξ)| / H(ξ)
  double dual_euler = 0.0;          // |x·∇H0(x) − H0(x)| / H0(x)
  double sign_rule = 0.0;           // |∇H(tξ) − sign(t)∇H(ξ)|
  double map_square = 0.0;          // |A(ξ)·ξ − H(ξ)²| / H(ξ)²
  double map_dual = 0.0;            // |H0(A(ξ)) − H(ξ)| / H(ξ)
  double min_coercivity = 0.0;      // min A(ξ)·ξ / |ξ|²
  double max_growth = 0.0;          // max |A(ξ)| / |ξ|
  double c1 = 0.0;
  double c2 = 0.0;
};

IdentityReport verify_identities(const NormSpec& norm, int sample_count,
                                 const DualEvalConfig& cfg, std::uint64_t seed);

}  // namespace finsler
