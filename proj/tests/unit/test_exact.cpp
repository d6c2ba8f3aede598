#include "finsler/error.hpp"
#include "finsler/exact_solutions.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace finsler;

namespace {

NormSpec diag41() {
  Eigen::MatrixXd m(2, 2);
  m << 4, 0, 0, 1;
  return NormSpec::ellipse(m);
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Exact, KindNames) {
  for (auto k : {SolutionKind::gauss_kernel, SolutionKind::blowup, SolutionKind::barenblatt, SolutionKind::talenti,
                 SolutionKind::singular_poly}) {
    EXPECT_EQ(solution_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(solution_kind_from_string("heat"), InvalidSpec);
}

TEST(Exact, Validation) {
  EXPECT_THROW(SolutionSpec::blowup(NormSpec::euclidean(2), 0.0), InvalidSpec);
  EXPECT_THROW(SolutionSpec::barenblatt(NormSpec::euclidean(1), 1.0, 1.0), InvalidSpec);
  EXPECT_THROW(SolutionSpec::barenblatt(NormSpec::euclidean(1), 2.0, -1.0), InvalidSpec);
  EXPECT_THROW(SolutionSpec::talenti(NormSpec::euclidean(2), 1.0, 1.0, 1.0), InvalidSpec);
  EXPECT_THROW(SolutionSpec::singular_poly(NormSpec::euclidean(2), 0), InvalidSpec);
}

TEST(Exact, TimeDomain) {
  const auto b = SolutionSpec::blowup(NormSpec::euclidean(2), 0.25);
  EXPECT_DOUBLE_EQ(b.max_time(), 1.0);
  EXPECT_THROW(eval_profile(b, 0.5, 1.0), DomainError);
  EXPECT_THROW(eval_profile(b, 0.5, -0.1), DomainError);
  EXPECT_THROW(eval_profile(SolutionSpec::gauss_kernel(NormSpec::euclidean(2)), 0.5, 0.0), DomainError);
  EXPECT_THROW(eval_profile(SolutionSpec::singular_poly(NormSpec::euclidean(3), 1), 0.0, 0.0), DomainError);
}

TEST(Exact, EllipseValuesThroughDualNorm) {
  // H0(x) = √(x₁²/4 + x₂²) for M = diag(4, 1).
  const auto g = SolutionSpec::gauss_kernel(diag41());
  EXPECT_NEAR(eval_solution(g, v2(2, 0), 0.5), std::exp(-0.5) / (2 * std::numbers::pi), 1e-15);
  const auto b = SolutionSpec::blowup(diag41(), 0.25);
  EXPECT_NEAR(eval_solution(b, v2(0, 1.5), 0.0), std::exp(0.25 * 2.25), 1e-14);
}

TEST(Exact, GaussKernelMassIsWulffVolumeRatio) {
  // ∫ (4πt)^{-N/2} e^{−H0²/4t} = |B_{H0}| / |B| = √det M.
  for (const auto& [n, mass] : {std::pair{NormSpec::euclidean(2), 1.0}, std::pair{diag41(), 2.0}}) {
    const auto s = SolutionSpec::gauss_kernel(n);
    GridShape grid;
    grid.dim = 2;
    grid.lo = {-20.0, -10.0};
    grid.hi = {20.0, 10.0};
    grid.cells = {200, 100};
    const auto u = GridFunction::sample(grid, [&](const Vec& x) { return eval_solution(s, x, 0.7); });
    EXPECT_NEAR(u.integral(), mass, 1e-10);
  }
}

TEST(Exact, BlowupMinimumAtOrigin) {
  const auto b = SolutionSpec::blowup(diag41(), 0.25);
  const auto grid = GridShape::cube(2, -2.0, 2.0, 40);
  for (double t : {0.0, 0.25, 0.5, 0.75}) {
    const auto v = GridFunction::sample(grid, [&](const Vec& x) { return eval_solution(b, x, t); });
    EXPECT_EQ(*std::min_element(v.values.begin(), v.values.end()), eval_profile(b, 0.0, t));
  }
}

TEST(Exact, BarenblattMassConserved) {
  // N = 1, m = 2: α = β = 1/3, k = 1/12, mass = (4/3)C√(12C).
  const double C = 1.3;
  const auto e = barenblatt_exponents(1, 2.0);
  EXPECT_NEAR(e.alpha, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(e.beta, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(e.k, 1.0 / 12.0, 1e-15);
  const auto s = SolutionSpec::barenblatt(NormSpec::euclidean(1), 2.0, C);
  for (double t : {0.5, 1.0, 2.0}) {
    const double edge = std::sqrt(12 * C) * std::cbrt(t);
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += eval_profile(s, edge * (i + 0.5) / n, t);
    EXPECT_NEAR(2.0 * sum * edge / n, 4.0 / 3.0 * C * std::sqrt(12 * C), 1e-7);
  }
}

TEST(Exact, TalentiProfileFormula) {
  const auto s = SolutionSpec::talenti(NormSpec::euclidean(2), 3.0, 2.0, 0.5);
  EXPECT_NEAR(eval_profile(s, 4.0, 0.0), std::pow(2.0 + 0.5 * std::pow(4.0, 1.5), 1.0 / 3.0), 1e-14);
}

TEST(Exact, GaussKernelResidualOrderTwo) {
  const auto s = SolutionSpec::gauss_kernel(diag41());
  const auto rep = residual_study(s, GridShape::cube(2, -3.0, 3.0, 48), 0.5, 0.02, 1);
  EXPECT_NEAR(rep.order, 2.0, 0.2);
}

TEST(Exact, BlowupResidualOrderTwo) {
  const auto s = SolutionSpec::blowup(NormSpec::euclidean(2), 0.25);
  ResidualWindow w;
  w.r_max = 1.0;
  for (double t : {0.25, 0.5, 0.75}) {
    const auto rep = residual_study(s, GridShape::cube(2, -1.5, 1.5, 48), t, 0.02, 1, w);
    EXPECT_NEAR(rep.order, 2.0, 0.2) << "t = " << t;
  }
}

TEST(Exact, BarenblattResidualAwayFromFront) {
  const auto s = SolutionSpec::barenblatt(NormSpec::euclidean(1), 2.0, 1.0);
  const auto rep = residual_study(s, GridShape::cube(1, -6.0, 6.0, 200), 1.0, 0.02, 1);
  EXPECT_GE(rep.order, 1.0);
}

TEST(Exact, LogarithmIsAnisotropicHarmonic) {
  const auto s = SolutionSpec::singular_poly(diag41(), 1);
  const auto a = singular_poly_check(s, GridShape::cube(2, -1.5, 1.5, 128));
  const auto b = singular_poly_check(s, GridShape::cube(2, -1.5, 1.5, 256));
  EXPECT_GT(a.nodes, 0u);
  EXPECT_GT(std::log2(a.max_residual / b.max_residual), 1.5);
  EXPECT_LT(b.max_residual, 0.05);
}

TEST(Exact, ResidualStudyNeedsTwoLevelsForOrder) {
  const auto s = SolutionSpec::gauss_kernel(NormSpec::euclidean(2));
  const auto rep = residual_study(s, GridShape::cube(2, -3.0, 3.0, 16), 0.5, 0.02, 0);
  EXPECT_EQ(rep.levels.size(), 1u);
  EXPECT_TRUE(std::isnan(rep.order));
}
