#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace finsler {

/// Largest dimension a norm may carry. Vectors live on the stack up to this size.
inline constexpr int kMaxDimension = 8;

/// Small dynamic vector with fixed capacity (no heap allocation).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDimension, 1>;

/// Exponent s of the outer l^s combination used by smoothed polytopes.
inline constexpr double kDefaultPolytopeExponent = 8.0;
inline constexpr int kMaxPolytopeDirections = 64;

enum class NormFamily { euclidean, p_norm, ellipse, smoothed_polytope, custom };

std::string_view to_string(NormFamily family);
NormFamily norm_family_from_string(std::string_view name);

/// Equivalence of H with the Euclidean norm.
///
/// min_on_sphere |ξ| ≤ H(ξ) ≤ max_on_sphere |ξ|; the duality-map bounds follow as
/// A(ξ)·ξ ≥ c1 |ξ|² and |A(ξ)| ≤ c2 |ξ| with c1 = min², c2 = max².
struct EquivalenceBounds {
  double min_on_sphere = 1.0;
  double max_on_sphere = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
};

namespace detail {

struct NormData {
  NormFamily family = NormFamily::euclidean;
  int dim = 0;
  double p = 2.0;
  Eigen::MatrixXd matrix;
  std::array<double, kMaxDimension * kMaxDimension> m{};  // row-major copy of matrix
  std::vector<Vec> directions;
  double epsilon = 0.0;
  double exponent = kDefaultPolytopeExponent;
  std::function<double(const Vec&)> custom;
  std::string custom_name;
  EquivalenceBounds bounds;
};

double custom_flux(const NormData& d, const double* xi, double* a);
double p_norm_flux(const NormData& d, const double* xi, double* a);
double polytope_flux(const NormData& d, const double* xi, double* a);

}  // namespace detail

/// A norm H on R^N from one of the built-in families, or a user-supplied custom norm.
///
/// Values are immutable and cheap to copy. All factories validate their parameters and
/// throw InvalidSpec for anything that is not a C^1 norm with strictly convex unit ball
/// (p = 1 or p = ∞, singular matrices, degenerate direction sets).
class NormSpec {
 public:
  static NormSpec euclidean(int dimension);
  static NormSpec p_norm(int dimension, double p);
  static NormSpec ellipse(const Eigen::MatrixXd& m);
  /// H(ξ) = (Σ_i ((d_i·ξ)² + ε²|ξ|²)^{s/2})^{1/s}. Directions are normalized.
  static NormSpec smoothed_polytope(const std::vector<Vec>& directions, double epsilon,
                                    double exponent = kDefaultPolytopeExponent);
  /// Norm given only by evaluation; gradients fall back to central differences and the
  /// dual to sphere maximization. Homogeneity and convexity are sampled at construction.
  static NormSpec custom(int dimension, std::function<double(const Vec&)> eval,
                         std::string name = "custom");

  NormFamily family() const { return d_->family; }
  int dimension() const { return d_->dim; }
  double p() const { return d_->p; }
  const Eigen::MatrixXd& matrix() const { return d_->matrix; }
  const std::vector<Vec>& directions() const { return d_->directions; }
  double epsilon() const { return d_->epsilon; }
  double exponent() const { return d_->exponent; }

  /// Short human-readable tag, e.g. "p_norm(p=3)" or "ellipse(diag(4,1))".
  std::string describe() const;

  /// Closed-form dual norm when the family has one (euclidean, p_norm, ellipse).
  std::optional<NormSpec> closed_form_dual() const;
  bool has_closed_form_dual() const;
  bool has_closed_form_gradient() const { return d_->family != NormFamily::custom; }
  /// True when H² is a quadratic form, i.e. A is linear and Lipschitz with constant c2.
  bool has_quadratic_energy() const;

  const EquivalenceBounds& bounds() const { return d_->bounds; }

  /// H(ξ).
  double operator()(const Vec& xi) const;
  /// ∇ξH(ξ); throws DomainError at ξ = 0.
  Vec gradient(const Vec& xi) const;
  /// A(ξ) = H(ξ)∇ξH(ξ), with A(0) = 0.
  Vec duality_map(const Vec& xi) const;

  /// Writes A(ξ) to `a` and returns H(ξ)²/2. Safe at ξ = 0. Hot path for grid kernels.
  double flux(const double* xi, double* a) const {
    const auto& d = *d_;
    switch (d.family) {
      case NormFamily::euclidean: {
        double v = 0.0;
        for (int i = 0; i < d.dim; ++i) {
          a[i] = xi[i];
          v += xi[i] * xi[i];
        }
        return 0.5 * v;
      }
      case NormFamily::ellipse: {
        double v = 0.0;
        for (int i = 0; i < d.dim; ++i) {
          double s = 0.0;
          for (int j = 0; j < d.dim; ++j) s += d.m[i * kMaxDimension + j] * xi[j];
          a[i] = s;
          v += s * xi[i];
        }
        return 0.5 * v;
      }
      case NormFamily::p_norm:
        return detail::p_norm_flux(d, xi, a);
      case NormFamily::smoothed_polytope:
        return detail::polytope_flux(d, xi, a);
      case NormFamily::custom:
        return detail::custom_flux(d, xi, a);
    }
    return 0.0;
  }

  bool operator==(const NormSpec& other) const;

 private:
  explicit NormSpec(std::shared_ptr<const detail::NormData> d) : d_(std::move(d)) {}
  static NormSpec finish(detail::NormData data);

  std::shared_ptr<const detail::NormData> d_;
};

/// Throws InvalidSpec unless `v` has the norm's dimension.
void check_dimension(const NormSpec& norm, const Vec& v);

/// Central differences with step max(1e-6, 1e-6|x|).
Vec central_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x);

/// Result of sampling the norm axioms on random vectors.
struct AxiomReport {
  double homogeneity = 0.0;  // max |H(αξ) − |α|H(ξ)| / (1 + H(ξ))
  double convexity = 0.0;    // max (H((ξ+η)/2) − (H(ξ)+H(η))/2)_+
  double positivity = 0.0;   // min H(ξ)/|ξ| over the samples
};

AxiomReport sample_axioms(const NormSpec& norm, int samples, std::uint64_t seed);

/// Random vector with Gaussian direction and log-uniform magnitude in [0.1, 10].
Vec random_vector(int dimension, std::mt19937_64& rng);

}  // namespace finsler
