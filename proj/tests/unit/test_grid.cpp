#include "finsler/error.hpp"
#include "finsler/grid.hpp"
#include "finsler/radial_profile.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

using namespace finsler;

TEST(Grid, RavelRoundTrip) {
  GridShape s;
  s.dim = 3;
  s.lo = {-1, 0, 2};
  s.hi = {1, 3, 4};
  s.cells = {4, 6, 5};
  s.validate();
  EXPECT_EQ(s.size(), 5u * 7u * 6u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.ravel(s.unravel(i)), i);
  EXPECT_EQ(s.stride(2), 1u);
  EXPECT_EQ(s.stride(0), 42u);
  EXPECT_DOUBLE_EQ(s.cell_volume(), 0.5 * 0.5 * 0.4);
}

TEST(Grid, BoundaryNodes) {
  const GridShape s = GridShape::cube(2, 0.0, 1.0, 4);
  std::size_t boundary = 0;
  for (std::size_t i = 0; i < s.size(); ++i) boundary += s.on_boundary(i);
  EXPECT_EQ(boundary, 16u);
  EXPECT_TRUE(s.on_boundary(0));
  EXPECT_FALSE(s.on_boundary(s.ravel({2, 2, 0})));
}

TEST(Grid, Refined) {
  const GridShape s = GridShape::cube(2, -1.0, 1.0, 8).refined(2);
  EXPECT_EQ(s.cells[0], 16);
  EXPECT_DOUBLE_EQ(s.spacing(1), 0.125);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(GridShape::cube(2, 0.0, 1.0, 3), InvalidSpec);
  EXPECT_THROW(GridShape::cube(2, 1.0, 1.0, 8), InvalidSpec);
  EXPECT_THROW(GridShape::cube(4, 0.0, 1.0, 8), InvalidSpec);
  EXPECT_THROW(GridShape::cube(0, 0.0, 1.0, 8), InvalidSpec);
}

TEST(Grid, GaussianIntegral) {
  const auto s = GridShape::cube(2, -6.0, 6.0, 96);
  const auto g = GridFunction::sample(s, [](const Vec& x) { return std::exp(-x.squaredNorm()); });
  EXPECT_NEAR(g.integral(), std::numbers::pi, 1e-12);
}

TEST(Grid, RequireFinite) {
  GridFunction g(GridShape::cube(1, 0.0, 1.0, 4));
  EXPECT_NO_THROW(g.require_finite());
  g[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(g.require_finite(), DomainError);
}

TEST(Grid, BinaryRoundTripIsBitExact) {
  GridShape s;
  s.dim = 2;
  s.lo = {-1.5, 0.25};
  s.hi = {2.0, 1.0};
  s.cells = {7, 5};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  GridFunction g(s);
  for (double& v : g.values) v = d(rng);
  std::stringstream ss;
  write_binary(g, ss);
  EXPECT_EQ(ss.str().size(), 8u + 2 * 16u + 2 * 8u + 8u * s.size());
  const GridFunction back = read_binary(ss);
  EXPECT_EQ(back.shape, s);
  EXPECT_EQ(back.values, g.values);
}

TEST(Grid, TruncatedBinaryIsRejected) {
  GridFunction g(GridShape::cube(2, 0.0, 1.0, 4), 1.0);
  std::stringstream ss;
  write_binary(g, ss);
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream cut(bytes);
  EXPECT_THROW(read_binary(cut), Error);
}

TEST(Grid, CsvLayout) {
  GridFunction g(GridShape::cube(1, 0.0, 1.0, 4));
  g[1] = 0.1;
  std::ostringstream os;
  write_csv(g, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x0,value");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0");
  std::getline(is, line);
  EXPECT_EQ(line, "0.25,0.10000000000000001");
}

TEST(Grid, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> e(-300.0, 300.0);
  for (int k = 0; k < 2000; ++k) {
    const double v = std::pow(10.0, e(rng)) * (k % 2 ? -1.0 : 1.0);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(Grid, GradientExactOnQuadratics) {
  const auto s = GridShape::cube(2, -1.0, 2.0, 12);
  const auto u = GridFunction::sample(s, [](const Vec& x) { return x[0] * x[0] + 3.0 * x[0] * x[1] - x[1]; });
  const auto g = gradient(u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec x = s.point(i);
    EXPECT_NEAR(g[0][i], 2.0 * x[0] + 3.0 * x[1], 1e-12);
    EXPECT_NEAR(g[1][i], 3.0 * x[0] - 1.0, 1e-12);
  }
}

TEST(RadialProfile, ReproducesEvenCubic) {
  auto f = [](double r) { return 1.0 + r * r - 0.3 * r * r * r; };
  const auto p = RadialProfile::sample(f, 3.0, 13);
  for (double r = 0.0; r <= 3.0; r += 0.0137) {
    EXPECT_NEAR(p(r), f(r), 1e-12);
    EXPECT_NEAR(p.derivative(r), 2.0 * r - 0.9 * r * r, 1e-11);
    EXPECT_NEAR(p.second_derivative(r), 2.0 - 1.8 * r, 1e-10);
  }
}

TEST(RadialProfile, FourthOrderValues) {
  auto f = [](double r) { return std::exp(-r * r); };
  auto err = [&](int n) {
    const auto p = RadialProfile::sample(f, 4.0, n);
    double e = 0.0;
    for (double r = 0.0; r <= 4.0; r += 0.001) e = std::max(e, std::abs(p(r) - f(r)));
    return e;
  };
  const double order = std::log2(err(81) / err(161));
  EXPECT_GT(order, 3.6);
}

TEST(RadialProfile, Validation) {
  EXPECT_THROW(RadialProfile({0, 1, 2}, {1, 1, 1}, true), InvalidSpec);
  std::vector<double> r{0.1, 1, 2, 3, 4, 5, 6, 7}, v(8, 1.0);
  EXPECT_THROW(RadialProfile(r, v, true), InvalidSpec);
  r = {0, 1, 2, 2, 4, 5, 6, 7};
  EXPECT_THROW(RadialProfile(r, v, true), InvalidSpec);
  const auto p = RadialProfile::sample([](double) { return 1.0; }, 2.0, 9);
  EXPECT_THROW(p(2.5), RangeError);
  EXPECT_THROW(p(-0.1), RangeError);
}
