#pragma once

#include "finsler/dual.hpp"
#include "finsler/grid.hpp"
#include "finsler/radial_profile.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace finsler {

/// Closed-form or sampled radial function f(r), with log|f| available so densities such as
/// e^{r³} can be handled far beyond the double range.
struct RadialFunction {
  enum class Form { constant, gaussian, exp_power, bump, samples };

  Form form = Form::constant;
  double amplitude = 1.0;  // a
  double coeff = 1.0;      // c
  double exponent = 2.0;   // k
  double radius = 1.0;     // R for bump
  std::optional<RadialProfile> profile;

  static RadialFunction constant(double a);
  /// a·e^{−c r²}
  static RadialFunction gaussian(double a, double c);
  /// a·e^{c r^k}
  static RadialFunction exp_power(double a, double c, double k);
  /// a·exp(1 − 1/(1 − (r/R)²)) on r < R, 0 beyond; equals a at r = 0.
  static RadialFunction bump(double a, double R);
  static RadialFunction samples(RadialProfile p);

  double operator()(double r) const;
  /// log|f(r)|; −∞ where f vanishes.
  double log_abs(double r) const;
  /// Radius beyond which f ≡ 0, or +∞.
  double support_radius() const;
};

std::string_view to_string(RadialFunction::Form form);
RadialFunction::Form radial_form_from_string(std::string_view name);

struct Atom {
  Vec point;
  double weight = 0.0;
};

/// Initial datum μ: a grid density, finitely many atoms, or an H0-radial density.
struct MeasureSpec {
  enum class Kind { density, atoms, radial_density };

  Kind kind = Kind::atoms;
  std::optional<GridFunction> density;
  std::vector<Atom> atoms;
  std::optional<RadialFunction> radial;
  std::optional<NormSpec> radial_norm;

  static MeasureSpec from_density(GridFunction g);
  static MeasureSpec from_atoms(std::vector<Atom> atoms);
  static MeasureSpec from_radial(RadialFunction f, NormSpec norm);
  static MeasureSpec zero(int dimension);

  void validate() const;
  int dimension() const;
  /// True when μ takes negative values somewhere (checked on the stored data).
  bool is_signed() const;
};

/// Lattice used to approximate sup_x and ∫ in the growth functional.
struct GrowthSampling {
  double spacing = 0.1;   // lattice step for densities
  int center_stride = 4;  // centers on every stride-th lattice node
};

struct GrowthValue {
  double value = 0.0;
  double log_value = -std::numeric_limits<double>::infinity();  // log of value, finite past overflow
  Vec argmax;
  bool coverage_warning = false;  // window smaller than the ball radius
};

/// max over centers x of ∫_{B_{H0}(x,1/√Λ)} e^{−ΛH0(y)²} d|μ|(y), restricted to the window
/// H0 ≤ window. Midpoint sums for densities, exact sums for atoms. A grid density uses its own
/// nodes as the lattice.
GrowthValue growth_functional(const MeasureSpec& mu, double lambda, const NormSpec& norm,
                              double window, const GrowthSampling& sampling = {},
                              const DualEvalConfig& cfg = {});

/// Same integrand over the fixed ball B_{H0}(center, radius) (no sup).
double growth_integral(const MeasureSpec& mu, double lambda, const NormSpec& norm, const Vec& center,
                       double radius, const GrowthSampling& sampling = {}, const DualEvalConfig& cfg = {});

struct ClassifyOptions {
  std::vector<double> windows{4.0, 6.0, 8.0, 12.0};
  double threshold = 1e-3;
  GrowthSampling sampling;
};

struct ClassifyRow {
  double lambda = 0.0;
  double window = 0.0;
  double value = 0.0;
  double log_value = 0.0;
  bool stabilized = false;  // relative change to the previous window ≤ threshold
};

struct Classification {
  bool admissible = false;  // some Λ in the grid stabilizes
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  double s_star = std::numeric_limits<double>::quiet_NaN();  // 1/(4Λ*)
  std::vector<ClassifyRow> table;
};

/// Λ* is the smallest grid Λ whose functional changes by ≤ threshold between the two
/// largest windows.
Classification classify(const MeasureSpec& mu, const NormSpec& norm, const std::vector<double>& lambda_grid,
                        const ClassifyOptions& options = {}, const DualEvalConfig& cfg = {});

/// Density on `shape`: every point mass (atoms, or density nodes × cell volume) is spread
/// with weights ∝ exp(−1/(1 − (H0(x−y)/width)²)) normalized over the in-grid nodes it
/// reaches, so total mass is preserved. Radial densities are sampled on `shape` first.
GridFunction mollify(const MeasureSpec& mu, const NormSpec& norm, const GridShape& shape, double width,
                     const DualEvalConfig& cfg = {});

/// ζ_m(x) = f(1−s)/(f(1−s)+f(s−1/2)), s = H0(x)/m, f(t) = e^{−1/t} (t > 0): 1 on H0 ≤ m/2,
/// 0 on H0 ≥ m, C^∞ in between.
double smooth_cutoff(double h0, double m);

}  // namespace finsler
