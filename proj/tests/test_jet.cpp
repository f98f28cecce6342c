#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "finsler/jet.hpp"

using namespace finsler;

namespace {

// Central finite difference of `f` in direction `var`, applied recursively
// along `alpha`. Only used for low orders with a plain-double function.
double fd_partial(const std::function<double(std::vector<double>)>& f, std::vector<double> p,
                  std::vector<int> alpha, double h) {
  for (std::size_t v = 0; v < alpha.size(); ++v) {
    if (alpha[v] == 0) continue;
    alpha[v] -= 1;
    auto plus = p, minus = p;
    plus[v] += h;
    minus[v] -= h;
    return (fd_partial(f, plus, alpha, h) - fd_partial(f, minus, alpha, h)) / (2 * h);
  }
  return f(p);
}

}  // namespace

TEST(JetContext, CoefficientCountMatchesMultiIndexCount) {
  // C(m + d, d)
  EXPECT_EQ(JetContext::make(2, 2)->size(), 6u);
  EXPECT_EQ(JetContext::make(4, 4)->size(), 70u);
  EXPECT_EQ(JetContext::make(6, 4)->size(), 210u);
  EXPECT_EQ(JetContext::make(1, 3)->size(), 4u);
}

TEST(JetContext, GradedOrderPrefixesLowerContexts) {
  auto hi = JetContext::make(3, 4);
  auto lo = JetContext::make(3, 2);
  ASSERT_EQ(hi->lower()->lower(), lo);
  for (std::size_t k = 0; k < lo->size(); ++k) EXPECT_EQ(hi->multi_index(k), lo->multi_index(k));
  EXPECT_EQ(hi->multi_index(0), (MultiIndex{0, 0, 0}));
  EXPECT_EQ(hi->multi_index(1), (MultiIndex{1, 0, 0}));
  EXPECT_EQ(hi->multi_index(4), (MultiIndex{2, 0, 0}));
}

TEST(JetContext, RejectsOrderAboveFour) {
  EXPECT_THROW(JetContext::make(2, 5), IndexError);
  EXPECT_THROW(JetContext::make(0, 2), IndexError);
}

TEST(Jet, LiftVariable) {
  auto ctx = JetContext::make(2, 2);
  Jet x = Jet::variable(ctx, 0, 3.0);
  EXPECT_EQ(x.value(), 3.0);
  EXPECT_EQ(x.partial({1, 0}), 1.0);
  EXPECT_EQ(x.partial({0, 1}), 0.0);
  EXPECT_EQ(x.partial({2, 0}), 0.0);
  EXPECT_EQ(x.partial({1, 1}), 0.0);

  Jet sq = x * x;
  EXPECT_EQ(sq.value(), 9.0);
  EXPECT_EQ(sq.partial({1, 0}), 6.0);
  EXPECT_EQ(sq.partial({2, 0}), 2.0);

  auto one = JetContext::make(1, 1);
  Jet z = Jet::variable(one, 0, 0.0);
  EXPECT_EQ(z.value(), 0.0);
  EXPECT_EQ(z.partial({1}), 1.0);

  EXPECT_THROW(Jet::variable(ctx, 2, 0.0), IndexError);
}

TEST(Jet, PolynomialPartials) {
  auto ctx = JetContext::make(2, 3);
  Jet x0 = Jet::variable(ctx, 0, 3.0), x1 = Jet::variable(ctx, 1, 2.0);
  Jet f = x0 * x0 * x1;
  EXPECT_DOUBLE_EQ(f.value(), 18.0);
  EXPECT_DOUBLE_EQ(f.partial({2, 0}), 4.0);
  EXPECT_DOUBLE_EQ(f.partial({2, 1}), 2.0);
  EXPECT_DOUBLE_EQ(f.partial({1, 1}), 6.0);
  EXPECT_DOUBLE_EQ(f.partial({0, 3}), 0.0);
}

TEST(Jet, ExtractPartial) {
  auto ctx = JetContext::make(2, 4);
  Jet x0 = Jet::variable(ctx, 0, 3.0), x1 = Jet::variable(ctx, 1, 2.0);
  Jet f = x0 * x0 * x1;
  EXPECT_DOUBLE_EQ(f.partial({0, 0}), f.value());
  EXPECT_DOUBLE_EQ(f.partial({2, 1}), 2.0);
  EXPECT_THROW(f.partial({3, 2}), IndexError);
}

TEST(Jet, Division) {
  auto ctx = JetContext::make(1, 2);
  Jet x = Jet::variable(ctx, 0, 0.0);
  Jet f = 1.0 / (1.0 + x);
  EXPECT_DOUBLE_EQ(f.value(), 1.0);
  EXPECT_DOUBLE_EQ(f.partial({1}), -1.0);
  EXPECT_DOUBLE_EQ(f.partial({2}), 2.0);

  EXPECT_THROW(Jet::constant(ctx, 1.0) / x, DegenerateValue);
  EXPECT_THROW(Jet::constant(ctx, 1.0) / (x + 1e-15), DegenerateValue);
  EXPECT_NO_THROW(divide(Jet::constant(ctx, 1.0), x + 1e-15, 1e-16));
}

TEST(Jet, ContextMismatch) {
  Jet a = Jet::variable(JetContext::make(2, 2), 0, 1.0);
  Jet b = Jet::variable(JetContext::make(2, 3), 0, 1.0);
  EXPECT_THROW(a + b, ContextMismatch);
  EXPECT_THROW(a * b, ContextMismatch);
}

TEST(Jet, Sqrt) {
  auto ctx = JetContext::make(1, 2);
  Jet r = sqrt(Jet::variable(ctx, 0, 4.0));
  EXPECT_DOUBLE_EQ(r.value(), 2.0);
  EXPECT_DOUBLE_EQ(r.partial({1}), 0.25);
  EXPECT_DOUBLE_EQ(r.partial({2}), -1.0 / 32.0);
  EXPECT_THROW(sqrt(Jet::variable(ctx, 0, 0.0)), DomainError);
}

TEST(Jet, PowRealMatchesProduct) {
  auto ctx = JetContext::make(2, 4);
  Jet s = 0.3 * Jet::variable(ctx, 0, 0.2) + Jet::variable(ctx, 1, -0.1) * Jet::variable(ctx, 0, 0.2);
  Jet a = pow(1.0 + s, 2.0);
  Jet b = (1.0 + s) * (1.0 + s);
  for (std::size_t k = 0; k < a.coefficients().size(); ++k)
    EXPECT_NEAR(a.coefficients()[k], b.coefficients()[k], 1e-15);
  // Through the fractional path too.
  Jet c = pow(pow(1.0 + s, 0.5), 4.0);
  for (std::size_t k = 0; k < a.coefficients().size(); ++k)
    EXPECT_NEAR(c.coefficients()[k], b.coefficients()[k], 1e-14);
}

TEST(Jet, LogDomain) {
  auto ctx = JetContext::make(1, 2);
  EXPECT_THROW(log(Jet::variable(ctx, 0, 0.0)), DomainError);
  EXPECT_THROW(pow(Jet::variable(ctx, 0, -1.0), 0.5), DomainError);
  EXPECT_NO_THROW(pow(Jet::variable(ctx, 0, -1.0), 3.0));
}

TEST(Jet, DerivativeAndTruncate) {
  auto ctx = JetContext::make(2, 4);
  Jet x0 = Jet::variable(ctx, 0, 1.5), x1 = Jet::variable(ctx, 1, -0.5);
  Jet f = sin(x0) * exp(x1);
  Jet fx = f.derivative(0);
  EXPECT_EQ(fx.order(), 3);
  EXPECT_NEAR(fx.value(), std::cos(1.5) * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(fx.partial({1, 2}), f.partial({2, 2}), 1e-14);
  Jet t = f.truncate(2);
  EXPECT_EQ(t.order(), 2);
  EXPECT_DOUBLE_EQ(t.partial({1, 1}), f.partial({1, 1}));
}

TEST(Jet, MulCommutativeAssociative) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  auto ctx = JetContext::make(3, 4);
  auto random_jet = [&] {
    Jet j(ctx);
    for (double& c : j.coefficients()) c = u(rng);
    return j;
  };
  for (int trial = 0; trial < 20; ++trial) {
    Jet a = random_jet(), b = random_jet(), c = random_jet();
    Jet ab = a * b, ba = b * a;
    Jet l = (a * b) * c, r = a * (b * c);
    for (std::size_t k = 0; k < ab.coefficients().size(); ++k) {
      EXPECT_NEAR(ab.coefficients()[k], ba.coefficients()[k], 1e-13);
      EXPECT_NEAR(l.coefficients()[k], r.coefficients()[k], 1e-13);
    }
  }
}

// Every partial of a composed expression against nested central differences
// of the plain-double expression, at 100 random points.
TEST(Jet, PartialsMatchFiniteDifferences) {
  auto ctx = JetContext::make(2, 4);
  const auto plain = [](std::vector<double> p) {
    const double a = p[0], b = p[1];
    return std::sqrt(1.0 + a * a * b * b) * std::exp(0.3 * a) + std::log(2.0 + std::sin(b)) / (1.5 + std::cos(a * b)) +
           std::pow(1.2 + 0.5 * a, 0.7);
  };
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> p{u(rng), u(rng)};
    Jet a = Jet::variable(ctx, 0, p[0]), b = Jet::variable(ctx, 1, p[1]);
    Jet f = sqrt(1.0 + a * a * b * b) * exp(0.3 * a) + log(2.0 + sin(b)) / (1.5 + cos(a * b)) + pow(1.2 + 0.5 * a, 0.7);
    EXPECT_NEAR(f.value(), plain(p), 1e-14);
    // Check order k from the jet's own order-(k-1) partials: one difference
    // per level keeps the step error at h^2 regardless of order.
    for (std::size_t k = 1; k < ctx->size(); ++k) {
      MultiIndex alpha = ctx->multi_index(k);
      std::size_t v = 0;
      while (alpha[v] == 0) ++v;
      MultiIndex lower = alpha;
      lower[v] -= 1;
      const double h = 1e-4;
      auto shifted = [&](double delta) {
        std::vector<double> q = p;
        q[v] += delta;
        Jet qa = Jet::variable(ctx, 0, q[0]), qb = Jet::variable(ctx, 1, q[1]);
        Jet g = sqrt(1.0 + qa * qa * qb * qb) * exp(0.3 * qa) + log(2.0 + sin(qb)) / (1.5 + cos(qa * qb)) +
                pow(1.2 + 0.5 * qa, 0.7);
        return g.partial(lower);
      };
      const double fd = (shifted(h) - shifted(-h)) / (2 * h);
      const double exact = f.partial(alpha);
      EXPECT_NEAR(exact, fd, 1e-5 * std::max(1.0, std::abs(exact))) << "trial " << trial << " index " << k;
    }
    // And the first two orders straight from plain-double differences.
    EXPECT_NEAR(f.partial({1, 0}), fd_partial(plain, p, {1, 0}, 1e-5), 1e-7);
    EXPECT_NEAR(f.partial({1, 1}), fd_partial(plain, p, {1, 1}, 1e-4), 1e-5);
  }
}

TEST(Jet, ChainRuleAgainstAnalyticComposition) {
  auto ctx = JetContext::make(1, 4);
  const double t = 0.4;
  Jet x = Jet::variable(ctx, 0, t);
  // f(g(x)) = exp(sin x): derivatives by hand.
  Jet f = exp(sin(x));
  const double s = std::sin(t), c = std::cos(t), e = std::exp(s);
  EXPECT_NEAR(f.partial({1}), e * c, 1e-14);
  EXPECT_NEAR(f.partial({2}), e * (c * c - s), 1e-14);
  EXPECT_NEAR(f.partial({3}), e * (c * c * c - 3 * s * c - c), 1e-13);
  EXPECT_NEAR(f.partial({4}), e * (c * c * c * c - 6 * s * c * c + 3 * s * s - 4 * c * c + s), 1e-13);
  // ln(cos x): derivatives -tan, -sec^2, -2 sec^2 tan, ...
  Jet g = log(cos(x));
  const double tn = std::tan(t), sec2 = 1 / (c * c);
  EXPECT_NEAR(g.partial({1}), -tn, 1e-14);
  EXPECT_NEAR(g.partial({2}), -sec2, 1e-14);
  EXPECT_NEAR(g.partial({3}), -2 * sec2 * tn, 1e-13);
  EXPECT_NEAR(g.partial({4}), -2 * sec2 * (sec2 + 2 * tn * tn), 1e-12);
}
