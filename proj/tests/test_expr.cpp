#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "finsler/expr.hpp"

using namespace finsler;

TEST(Parse, PrecedenceAndAssociativity) {
  const Expr x1 = Expr::coord(0), x2 = Expr::coord(1);
  EXPECT_EQ(parse_expression("x1^2 + x2^2"), pow(x1, Expr::number(2)) + pow(x2, Expr::number(2)));
  EXPECT_EQ(parse_expression("-x2"), -x2);
  EXPECT_EQ(parse_expression("2^3^2"), pow(Expr::number(2), pow(Expr::number(3), Expr::number(2))));
  EXPECT_EQ(parse_expression("1 - 2 - 3"), (Expr::number(1) - Expr::number(2)) - Expr::number(3));
  EXPECT_EQ(parse_expression("6 / 2 * 3"), (Expr::number(6) / Expr::number(2)) * Expr::number(3));
  EXPECT_EQ(parse_expression("1 + 2 * x1"), Expr::number(1) + Expr::number(2) * x1);
  // Unary minus binds tighter than '^'.
  EXPECT_EQ(parse_expression("-x1^2"), pow(-x1, Expr::number(2)));
  EXPECT_DOUBLE_EQ(parse_expression("-x1^2").eval(std::vector<double>{3.0}), 9.0);
}

TEST(Parse, Numbers) {
  EXPECT_DOUBLE_EQ(parse_expression("1.5e-3").eval(std::vector<double>{}), 1.5e-3);
  EXPECT_DOUBLE_EQ(parse_expression(".25").eval(std::vector<double>{}), 0.25);
  EXPECT_DOUBLE_EQ(parse_expression("2E2").eval(std::vector<double>{}), 200.0);
  EXPECT_THROW(parse_expression("1e"), SyntaxError);
  EXPECT_THROW(parse_expression("."), SyntaxError);
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse_expression("sqrt(x1, x2)"), ArityError);
  EXPECT_THROW(parse_expression("pow(x1)"), ArityError);
  EXPECT_THROW(parse_expression("y1 + 1"), UnknownIdentifier);
  EXPECT_THROW(parse_expression("x9"), UnknownIdentifier);
  EXPECT_THROW(parse_expression("x0"), UnknownIdentifier);
  EXPECT_THROW(parse_expression("abs(x1)"), UnknownIdentifier);
  try {
    parse_expression("x1 + * 2");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  try {
    parse_expression("(x1 + 2");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 7u);
  }
  try {
    parse_expression("x1 + foo(2)");
    FAIL();
  } catch (const UnknownIdentifier& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
}

TEST(EvalJet, Polynomial) {
  auto ctx = JetContext::make(2, 2);
  Jet b = parse_expression("x1^2+x2^2").eval_jet(ctx, std::vector<double>{0.6, 0.0});
  EXPECT_NEAR(b.value(), 0.36, 1e-15);
  EXPECT_NEAR(b.partial({1, 0}), 1.2, 1e-15);
  EXPECT_NEAR(b.partial({0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(b.partial({2, 0}), 2.0, 1e-15);
  EXPECT_NEAR(b.partial({0, 2}), 2.0, 1e-15);
  EXPECT_NEAR(b.partial({1, 1}), 0.0, 1e-15);

  Jet m = parse_expression("x1*x2").eval_jet(ctx, std::vector<double>{2.0, 3.0});
  EXPECT_DOUBLE_EQ(m.value(), 6.0);
  EXPECT_DOUBLE_EQ(m.partial({1, 1}), 1.0);
}

TEST(EvalJet, DomainErrors) {
  auto ctx = JetContext::make(2, 2);
  EXPECT_THROW(parse_expression("ln(x1)").eval_jet(ctx, std::vector<double>{0.0, 1.0}), DomainError);
  EXPECT_THROW(parse_expression("x1^0.5").eval_jet(ctx, std::vector<double>{-1.0, 1.0}), DomainError);
  EXPECT_THROW(parse_expression("1/x1").eval_jet(ctx, std::vector<double>{0.0, 1.0}), DegenerateValue);
  EXPECT_NO_THROW(parse_expression("x1^-1").eval_jet(ctx, std::vector<double>{-2.0, 1.0}));
  EXPECT_THROW(parse_expression("x3").eval_jet(ctx, std::vector<double>{1.0, 1.0}), IndexError);
}

TEST(EvalJet, PowWithCoordinateExponent) {
  auto ctx = JetContext::make(2, 2);
  Jet f = parse_expression("pow(x1, x2)").eval_jet(ctx, std::vector<double>{2.0, 3.0});
  EXPECT_NEAR(f.value(), 8.0, 1e-14);
  EXPECT_NEAR(f.partial({1, 0}), 12.0, 1e-13);
  EXPECT_NEAR(f.partial({0, 1}), 8.0 * std::log(2.0), 1e-13);
}

namespace {

// Random expression text over the supported grammar; positive-valued
// subterms wherever a function needs them.
std::string random_expression(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> num(0.1, 3.0);
  if (depth == 0) {
    int k = pick(rng);
    if (k < 4) return "x" + std::to_string(1 + k % 3);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", num(rng));
    return buf;
  }
  const std::string a = random_expression(rng, depth - 1);
  const std::string b = random_expression(rng, depth - 1);
  switch (pick(rng)) {
    case 0: return a + " + " + b;
    case 1: return a + " - " + b;
    case 2: return a + " * " + b;
    case 3: return a + " / (2 + (" + b + ")^2)";
    case 4: return "(" + a + ")^2";
    case 5: return "-" + a;
    case 6: return "sqrt(1 + (" + a + ")^2)";
    case 7: return "exp(0.1 * " + a + ")";
    case 8: return "sin(" + a + ") + cos(" + b + ")";
    default: return "ln(2 + (" + a + ")^2)";
  }
}

}  // namespace

TEST(Expr, PrintParseRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string text = random_expression(rng, 4);
    const Expr once = parse_expression(text);
    const Expr twice = parse_expression(once.to_string());
    EXPECT_EQ(once, twice) << text;
    EXPECT_EQ(once.to_string(), twice.to_string());
  }
}

TEST(Expr, JetValueMatchesScalarEvaluation) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  auto ctx = JetContext::make(3, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const Expr e = parse_expression(random_expression(rng, 4));
    const std::vector<double> p{u(rng), u(rng), u(rng)};
    const double scalar = e.eval(p);
    const double jet = e.eval_jet(ctx, p).value();
    EXPECT_NEAR(jet, scalar, 1e-15 * std::max(1.0, std::abs(scalar))) << e.to_string();
  }
}

TEST(Expr, MaxCoordinate) {
  EXPECT_EQ(parse_expression("2 + 3").max_coordinate(), -1);
  EXPECT_EQ(parse_expression("x1 * sin(x4)").max_coordinate(), 3);
}
