#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "finsler/curvature.hpp"

using namespace finsler;

namespace {

FinslerMetric euclidean(int n) { return riemannian_metric(AlphaSpec::euclidean(n)); }

FinslerMetric conformal_sphere() {
  return riemannian_metric(AlphaSpec::conformal(2, parse_expression("4/(1+x1^2+x2^2)^2")));
}

/// Randers F = alpha + beta with Euclidean alpha.
FinslerMetric flat_randers(const std::vector<std::string>& b) {
  const AlphaSpec alpha = AlphaSpec::euclidean(static_cast<int>(b.size()));
  const BetaSpec beta = BetaSpec::parse(b);
  FinslerMetric m;
  m.dim = alpha.dim();
  m.squared_norm = [alpha, beta](std::span<const Jet> x, std::span<const Jet> y) {
    Jet f = sqrt(quadratic_form(alpha.eval(x), y)) + linear_form(beta.eval(x), y);
    return f * f;
  };
  m.in_domain = [](std::span<const double>, std::span<const double>) { return true; };
  return m;
}

}  // namespace

TEST(FundamentalTensor, Euclidean) {
  auto [g, g_inv] = fundamental_tensor(euclidean(2), {{0.3, -0.2}, {0.7, 1.1}});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(g(i, j), i == j ? 1.0 : 0.0, 1e-14);
      EXPECT_NEAR(g_inv(i, j), i == j ? 1.0 : 0.0, 1e-14);
    }
}

TEST(FundamentalTensor, FlatRandersClosedForm) {
  // Oracle: g_ij = (F/alpha)(a_ij - y_i y_j / alpha^2) + (b_i + y_i/alpha)(b_j + y_j/alpha)
  const std::vector<double> b{0.5, 0.0}, y{1.0, 0.0};
  const double alpha = 1.0, F = alpha + 0.5;
  double oracle[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      oracle[i][j] = (F / alpha) * ((i == j) - y[i] * y[j] / (alpha * alpha)) + (b[i] + y[i] / alpha) * (b[j] + y[j] / alpha);
  EXPECT_DOUBLE_EQ(oracle[0][0], 2.25);
  EXPECT_DOUBLE_EQ(oracle[1][1], 1.5);

  auto [g, g_inv] = fundamental_tensor(flat_randers({"0.5", "0"}), {{0.0, 0.0}, y});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(g(i, j), oracle[i][j], 1e-13);
  EXPECT_NEAR(quadratic_form(g, y, y), 2.25, 1e-13);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0;
      for (int k = 0; k < 2; ++k) s += g(i, k) * g_inv(k, j);
      EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-10);
    }
}

TEST(FundamentalTensor, RejectsDegenerateTensor) {
  // F^2 = sqrt(y1^4 + y2^4) is only semi-definite along the axes.
  FinslerMetric quartic;
  quartic.dim = 2;
  quartic.squared_norm = [](std::span<const Jet>, std::span<const Jet> y) {
    return sqrt(pow(y[0], 4) + pow(y[1], 4));
  };
  quartic.in_domain = [](std::span<const double>, std::span<const double>) { return true; };
  EXPECT_THROW(fundamental_tensor(quartic, {{0.0, 0.0}, {1.0, 0.0}}), SingularMetric);
  EXPECT_NO_THROW(fundamental_tensor(quartic, {{0.0, 0.0}, {1.0, 0.5}}));
}

TEST(FundamentalTensor, ZeroDirectionIsDomainError) {
  EXPECT_THROW(fundamental_tensor(euclidean(2), {{0.0, 0.0}, {0.0, 0.0}}), DomainError);
}

TEST(Spray, ConstantMetricHasZeroSpray) {
  auto G = spray(flat_randers({"0.2", "-0.1"}), {{0.4, 0.1}, {0.3, 0.9}});
  EXPECT_NEAR(G[0], 0.0, 1e-15);
  EXPECT_NEAR(G[1], 0.0, 1e-15);
}

TEST(Spray, PolarChartChristoffel) {
  // a = diag(1, x1^2): Gamma^1_22 = -x1, Gamma^2_12 = 1/x1.
  // G^1 = 1/2 Gamma^1_22 y2^2 = -1, G^2 = Gamma^2_12 y1 y2 = 0.5 at x1 = 2, y = (1, 1).
  AlphaSpec a(2);
  a.set(0, 0, Expr::number(1));
  a.set(1, 1, parse_expression("x1^2"));
  auto G = spray(riemannian_metric(a), {{2.0, 0.3}, {1.0, 1.0}});
  EXPECT_NEAR(G[0], -1.0, 1e-13);
  EXPECT_NEAR(G[1], 0.5, 1e-13);
}

TEST(Spray, QuadraticHomogeneity) {
  auto m = flat_randers({"0.3*x2", "0.1*x1*x2"});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    TangentSample s{{u(rng), u(rng)}, {u(rng), u(rng)}};
    TangentSample s2{s.x, {2 * s.y[0], 2 * s.y[1]}};
    auto G = spray(m, s), G2 = spray(m, s2);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(G2[i], 4 * G[i], 1e-12 * std::max(1.0, std::abs(G2[i])));
  }
}

TEST(Riemann, FlatMetricIsFlat) {
  auto cp = curvature_point(euclidean(3), {{0.1, 0.2, 0.3}, {1, -1, 0.5}});
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(cp.riemann(i, k), 0.0, 1e-14);
  EXPECT_NEAR(cp.ricci, 0.0, 1e-14);
}

TEST(Riemann, ConformalSphere) {
  // Constant curvature K = 1: R^i_k = alpha^2 delta^i_k - y^i y_k.
  auto cp = curvature_point(conformal_sphere(), {{0.0, 0.0}, {1.0, 0.0}});
  EXPECT_NEAR(cp.riemann(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(cp.riemann(1, 1), 4.0, 1e-12);
  EXPECT_NEAR(cp.riemann(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(cp.riemann(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(cp.ricci, 4.0, 1e-12);
  EXPECT_NEAR(cp.einstein_scalar, 1.0, 1e-12);
}

TEST(Riemann, ConformalSphereEverywhere) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto m = conformal_sphere();
  for (int t = 0; t < 20; ++t) {
    TangentSample s{{u(rng), u(rng)}, {u(rng), u(rng)}};
    EXPECT_NEAR(einstein_scalar(m, s), 1.0, 1e-10);
    EXPECT_NEAR(flag_curvature(m, s, std::vector<double>{-s.y[1], s.y[0] + 0.3}), 1.0, 1e-10);
  }
}

TEST(Riemann, AnnihilatesYAndIsSelfAdjoint) {
  auto m = flat_randers({"0.3*x2 + 0.1*x1^2", "0.2*sin(x1)"});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 30; ++t) {
    TangentSample s{{u(rng), u(rng)}, {u(rng), u(rng)}};
    if (!m.admits(s.x, s.y)) continue;
    auto cp = curvature_point(m, s);
    double scale = 0;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) scale = std::max(scale, std::abs(cp.riemann(i, k)));
    scale = std::max(scale, 1e-300);
    for (int i = 0; i < 2; ++i) {
      double ry = 0;
      for (int k = 0; k < 2; ++k) ry += cp.riemann(i, k) * s.y[k];
      EXPECT_LT(std::abs(ry), 1e-9 * scale);
    }
    // g_im R^m_k symmetric
    double gr[2][2] = {};
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int mm = 0; mm < 2; ++mm) gr[i][k] += cp.g(i, mm) * cp.riemann(mm, k);
    EXPECT_LT(std::abs(gr[0][1] - gr[1][0]), 1e-8 * scale);
    EXPECT_NEAR(quadratic_form(cp.g, s.y, s.y), cp.F * cp.F, 1e-10 * cp.F * cp.F);
  }
}

TEST(Homogeneity, SprayCurvatureAndLambda) {
  auto m = flat_randers({"0.3*x2 + 0.1*x1^2", "0.2*sin(x1)"});
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  while (checked < 100) {
    TangentSample s{{u(rng), u(rng)}, {u(rng), u(rng)}};
    if (!m.admits(s.x, s.y)) continue;
    ++checked;
    auto base = curvature_point(m, s);
    for (double t : {0.5, 2.0, 3.0}) {
      auto scaled = curvature_point(m, {s.x, {t * s.y[0], t * s.y[1]}});
      EXPECT_NEAR(scaled.F, t * base.F, 1e-9 * t * base.F);
      for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(scaled.spray[i], t * t * base.spray[i], 1e-9 * std::max(1e-6, t * t * std::abs(base.spray[i])));
        for (int k = 0; k < 2; ++k)
          EXPECT_NEAR(scaled.riemann(i, k), t * t * base.riemann(i, k),
                      1e-9 * std::max(1e-6, t * t * std::abs(base.riemann(i, k))));
      }
      EXPECT_NEAR(scaled.ricci, t * t * base.ricci, 1e-9 * std::max(1e-6, t * t * std::abs(base.ricci)));
      EXPECT_NEAR(scaled.einstein_scalar, base.einstein_scalar, 1e-9 * std::max(1e-6, std::abs(base.einstein_scalar)));
    }
  }
}

TEST(Reversibility, RiemannianIsReversible) {
  EXPECT_NEAR(reversibility_residual(conformal_sphere(), {{0.3, 0.5}, {0.2, 1.0}}), 0.0, 1e-12);
}

TEST(Reversibility, NonClosedRandersIsNot) {
  const double r = reversibility_residual(flat_randers({"0.3*x2", "0"}), {{0.0, 1.0}, {1.0, 0.5}});
  EXPECT_GT(r, 1e-3);
}

TEST(FlagCurvature, PlaneInvarianceAndTwoDimensionalLambda) {
  auto m = flat_randers({"0.3*x2", "0.1*x1"});
  TangentSample s{{0.2, 0.4}, {0.6, -0.8}};
  auto cp = curvature_point(m, s);
  const std::vector<double> u{0.3, 0.9};
  const std::vector<double> u2{u[0] + 2 * s.y[0], u[1] + 2 * s.y[1]};
  EXPECT_NEAR(flag_curvature(cp, u), flag_curvature(cp, u2), 1e-10);
  EXPECT_NEAR(flag_curvature(cp, u), cp.einstein_scalar, 1e-10);
  EXPECT_THROW(flag_curvature(cp, s.y), DegeneratePlane);
}

TEST(EinsteinCheck, ConstantCurvatureAndNonClosedRanders) {
  const std::vector<std::vector<double>> pts{{0.1, 0.2}, {-0.5, 0.3}, {0.7, -0.4}};
  auto sphere = einstein_check(conformal_sphere(), pts, 32);
  EXPECT_TRUE(sphere.verdict);
  EXPECT_LT(sphere.max_spread, 1e-9);
  auto randers = einstein_check(flat_randers({"0.3*x2", "0"}), pts, 32);
  EXPECT_FALSE(randers.verdict);
}
