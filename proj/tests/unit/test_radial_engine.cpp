#include "finsler/error.hpp"
#include "finsler/radial_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

// ∫_{S^{N−1}} e^{zθ₁} dθ = (2π)^{N/2} z^{1−N/2} I_{N/2−1}(z).
double sphere_oracle(int n, double z) {
  const double nu = 0.5 * n - 1.0;
  return std::pow(2 * kPi, 0.5 * n) * std::pow(z, -nu) * std::cyl_bessel_i(nu, z);
}

RadialProfile gaussian(double r_max = 20.0) {
  return RadialProfile::sample([](double r) { return std::exp(-r * r); }, r_max, 4001);
}

}  // namespace

TEST(Quadrature, GaussLegendreIsExactToDegree2nMinus1) {
  const auto q = QuadratureRule::gauss_legendre(10, -1.0, 2.0);
  for (int d = 0; d <= 19; ++d) {
    double s = 0.0;
    for (int i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], d);
    const double exact = (std::pow(2.0, d + 1) - std::pow(-1.0, d + 1)) / (d + 1);
    EXPECT_NEAR(s, exact, 1e-10 * std::max(1.0, std::abs(exact))) << d;
  }
  EXPECT_NO_THROW(QuadratureRule::gauss_legendre(64).validate());
}

TEST(Quadrature, ChebyshevWeightIntegrals) {
  // ∫ t^{2k} (1−t²)^{-1/2} dt = π (2k−1)!!/(2k)!!.
  const auto q = QuadratureRule::chebyshev_gauss(16);
  double ratio = 1.0;
  for (int k = 0; k < 16; ++k) {
    if (k > 0) ratio *= (2.0 * k - 1.0) / (2.0 * k);
    double s = 0.0;
    for (int i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], 2 * k);
    EXPECT_NEAR(s, kPi * ratio, 1e-13);
  }
}

TEST(Quadrature, ValidationAndNames) {
  EXPECT_THROW(QuadratureRule::gauss_legendre(4).validate(), InvalidSpec);
  auto q = QuadratureRule::gauss_legendre(16);
  q.weights[3] = -q.weights[3];
  EXPECT_THROW(q.validate(), InvalidSpec);
  EXPECT_EQ(quadrature_kind_from_string(to_string(QuadratureKind::chebyshev_gauss)), QuadratureKind::chebyshev_gauss);
  EXPECT_THROW(quadrature_kind_from_string("simpson"), InvalidSpec);
  SphereIntegralConfig bad = SphereIntegralConfig::defaults(2);
  bad.rule = QuadratureRule::gauss_legendre(64);
  EXPECT_THROW(bad.validate(), InvalidSpec);
}

TEST(SphereIntegral, Measures) {
  EXPECT_DOUBLE_EQ(sphere_measure(0), 2.0);
  EXPECT_NEAR(sphere_measure(1), 2 * kPi, 1e-14);
  EXPECT_NEAR(sphere_measure(2), 4 * kPi, 1e-14);
  EXPECT_NEAR(sphere_measure(3), 2 * kPi * kPi, 1e-13);
}

TEST(SphereIntegral, TwoDimensionsIsBesselI0) {
  const auto cfg = SphereIntegralConfig::defaults(2);
  for (double z : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double i = sphere_integral_I(z, cfg);
    EXPECT_LE(std::abs(i - 2 * kPi * std::cyl_bessel_i(0.0, z)) / i, 1e-8) << z;
    EXPECT_LE(std::abs(bessel_I0(z) - std::cyl_bessel_i(0.0, z)) / std::cyl_bessel_i(0.0, z), 1e-14);
  }
}

TEST(SphereIntegral, ThreeDimensionsIsSinh) {
  const auto cfg = SphereIntegralConfig::defaults(3);
  EXPECT_NEAR(sphere_integral_I(0.0, cfg), 4 * kPi, 1e-12);
  EXPECT_NEAR(sphere_integral_I(1.0, cfg), 14.768013745765, 1e-10);
  for (double z : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    const double exact = 4 * kPi * std::sinh(z) / z;
    EXPECT_LE(std::abs(sphere_integral_I(z, cfg) - exact) / exact, 1e-10) << z;
  }
}

TEST(SphereIntegral, HigherDimensionsMatchBesselForm) {
  for (int n : {4, 5, 6}) {
    const auto cfg = SphereIntegralConfig::defaults(n);
    for (double z : {0.3, 1.0, 4.0, 20.0, 100.0}) {
      const double exact = sphere_oracle(n, z);
      EXPECT_LE(std::abs(sphere_integral_I(z, cfg) - exact) / exact, 1e-10) << n << " " << z;
    }
  }
}

TEST(SphereIntegral, OneDimension) {
  const auto cfg = SphereIntegralConfig::defaults(1);
  EXPECT_NEAR(sphere_integral_I(1.5, cfg), 2 * std::cosh(1.5), 1e-14);
}

TEST(SphereIntegral, ScaledFormPastOverflow) {
  const auto c2 = SphereIntegralConfig::defaults(2);
  const auto c3 = SphereIntegralConfig::defaults(3);
  EXPECT_THROW(sphere_integral_I(701.0, c3), RangeError);
  for (double z : {40.0, 300.0, 650.0}) {
    const double i0s = std::cyl_bessel_i(0.0, z) * std::exp(-z);
    EXPECT_LE(std::abs(bessel_I0_scaled(z) - i0s) / i0s, 1e-12) << z;
    EXPECT_LE(std::abs(sphere_integral_I_scaled(z, c2) - 2 * kPi * i0s) / (2 * kPi * i0s), 1e-10) << z;
  }
  const double z = 5000.0;
  EXPECT_LE(std::abs(sphere_integral_I_scaled(z, c3) - 2 * kPi * (1 - std::exp(-2 * z)) / z) / (2 * kPi / z), 1e-10);
}

TEST(RadialHeat, GaussianClosedForms) {
  const auto phi = gaussian();
  for (int n : {1, 2, 3}) {
    const auto cfg = SphereIntegralConfig::defaults(n);
    for (double t : {1e-3, 0.1, 0.25, 1.0}) {
      for (double r : {0.0, 0.4, 1.0, 2.0}) {
        const double exact = std::pow(1 + 4 * t, -0.5 * n) * std::exp(-r * r / (1 + 4 * t));
        EXPECT_NEAR(radial_heat_solution_at(phi, n, r, t, cfg), exact, 1e-9) << n << " " << t << " " << r;
      }
    }
  }
}

TEST(RadialHeat, ConstantStaysConstant) {
  const auto phi = RadialProfile::sample([](double) { return 1.0; }, 30.0, 301);
  const auto cfg = SphereIntegralConfig::defaults(2);
  for (double r : {0.0, 1.0, 3.0}) EXPECT_NEAR(radial_heat_solution_at(phi, 2, r, 0.5, cfg), 1.0, 1e-9);
}

TEST(RadialHeat, EllipseMatchesEuclideanInDualNorm) {
  Eigen::MatrixXd m(2, 2);
  m << 4, 0, 0, 1;
  Vec x(2);
  x << 1.2, -0.4;
  const double h0 = std::sqrt(1.44 / 4 + 0.16);
  const auto cfg = SphereIntegralConfig::defaults(2);
  EXPECT_NEAR(radial_heat_solution(gaussian(), NormSpec::ellipse(m), x, 0.25, cfg), std::exp(-h0 * h0 / 2) / 2, 1e-9);
}

TEST(RadialHeat, ShortProfileRaises) {
  const auto cfg = SphereIntegralConfig::defaults(2);
  const auto phi = RadialProfile::sample([](double) { return 1.0; }, 3.0, 31);
  EXPECT_THROW(radial_heat_solution_at(phi, 2, 1.0, 1.0, cfg), RangeError);
  EXPECT_THROW(radial_heat_solution_at(phi, 2, 1.0, 0.0, cfg), DomainError);
  EXPECT_THROW(radial_heat_solution_at(phi, 3, 1.0, 0.1, cfg), InvalidSpec);
}
