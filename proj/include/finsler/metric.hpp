#pragma once

// Metric data: Riemannian (alpha) and 1-form (beta) expression specs, tangent
// samples, and the generic Finsler metric evaluator consumed by the curvature
// engine.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/expr.hpp"
#include "finsler/jet.hpp"
#include "finsler/linalg.hpp"

namespace finsler {

inline constexpr int kMaxDimension = 8;

struct TangentSample {
  std::vector<double> x;
  std::vector<double> y;
};

/// Symmetric matrix of coordinate expressions a_ij(x).
class AlphaSpec {
public:
  AlphaSpec() = default;
  explicit AlphaSpec(int n) : n_(n), entries_(static_cast<std::size_t>(n * n), Expr::number(0.0)) {
    check_dim(n);
  }

  static AlphaSpec euclidean(int n) {
    AlphaSpec a(n);
    for (int i = 0; i < n; ++i) a.set(i, i, Expr::number(1.0));
    return a;
  }

  /// a_ij = factor(x) * delta_ij.
  static AlphaSpec conformal(int n, const Expr& factor) {
    AlphaSpec a(n);
    for (int i = 0; i < n; ++i) a.set(i, i, factor);
    return a;
  }

  /// Rows of expression text; the matrix must be symmetric entry-by-entry
  /// after parsing (an empty entry above the diagonal mirrors below).
  static AlphaSpec parse(const std::vector<std::vector<std::string>>& rows) {
    const int n = static_cast<int>(rows.size());
    AlphaSpec a(n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw IndexError("alpha matrix row " + std::to_string(i) + " has wrong length");
      for (int j = 0; j < n; ++j)
        a.entries_[static_cast<std::size_t>(i * n + j)] = parse_expression(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!(a(i, j) == a(j, i)))
          throw IndexError("alpha matrix is not symmetric at (" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ")");
    return a;
  }

  int dim() const noexcept { return n_; }
  const Expr& operator()(int i, int j) const { return entries_[static_cast<std::size_t>(i * n_ + j)]; }

  void set(int i, int j, const Expr& e) {
    entries_[static_cast<std::size_t>(i * n_ + j)] = e;
    entries_[static_cast<std::size_t>(j * n_ + i)] = e;
  }

  int max_coordinate() const {
    int m = -1;
    for (const auto& e : entries_) m = std::max(m, e.max_coordinate());
    return m;
  }

  JetMatrix eval(std::span<const Jet> x) const {
    JetMatrix a(n_, Jet::constant(x[0].context(), 0.0));
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        a(i, j) = (*this)(i, j).eval(x);
        if (j != i) a(j, i) = a(i, j);
      }
    return a;
  }

  Matrix eval(std::span<const double> x) const {
    Matrix a(n_, 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) a(i, j) = a(j, i) = (*this)(i, j).eval(x);
    return a;
  }

private:
  static void check_dim(int n) {
    if (n < 1 || n > kMaxDimension) throw IndexError("dimension " + std::to_string(n) + " outside 1..8");
  }

  int n_ = 0;
  std::vector<Expr> entries_;
};

/// Covector of coordinate expressions b_i(x).
class BetaSpec {
public:
  BetaSpec() = default;
  explicit BetaSpec(std::vector<Expr> components) : b_(std::move(components)) {}

  static BetaSpec zero(int n) { return BetaSpec(std::vector<Expr>(static_cast<std::size_t>(n), Expr::number(0.0))); }

  static BetaSpec parse(const std::vector<std::string>& components) {
    std::vector<Expr> b;
    for (const auto& c : components) b.push_back(parse_expression(c));
    return BetaSpec(std::move(b));
  }

  int dim() const noexcept { return static_cast<int>(b_.size()); }
  const Expr& operator[](int i) const { return b_[static_cast<std::size_t>(i)]; }

  int max_coordinate() const {
    int m = -1;
    for (const auto& e : b_) m = std::max(m, e.max_coordinate());
    return m;
  }

  std::vector<Jet> eval(std::span<const Jet> x) const {
    std::vector<Jet> out;
    out.reserve(b_.size());
    for (const auto& e : b_) out.push_back(e.eval(x));
    return out;
  }

  std::vector<double> eval(std::span<const double> x) const {
    std::vector<double> out;
    for (const auto& e : b_) out.push_back(e.eval(x));
    return out;
  }

private:
  std::vector<Expr> b_;
};

/// A Finsler metric given by a jet-evaluable F^2(x, y).
struct FinslerMetric {
  using SquaredNorm = std::function<Jet(std::span<const Jet> x, std::span<const Jet> y)>;
  using Domain = std::function<bool(std::span<const double> x, std::span<const double> y)>;

  int dim = 0;
  SquaredNorm squared_norm;
  Domain in_domain;
  std::string label;

  /// F(x, y) by plain evaluation.
  double norm(std::span<const double> x, std::span<const double> y) const {
    const double f2 = squared_norm_value(x, y);
    if (!(f2 > 0.0)) throw DomainError("F^2 is not positive at the sample");
    return std::sqrt(f2);
  }

  double squared_norm_value(std::span<const double> x, std::span<const double> y) const {
    auto ctx = JetContext::make(2 * dim, 0);
    std::vector<Jet> xs, ys;
    for (double v : x) xs.push_back(Jet::constant(ctx, v));
    for (double v : y) ys.push_back(Jet::constant(ctx, v));
    return squared_norm(xs, ys).value();
  }

  bool admits(std::span<const double> x, std::span<const double> y) const {
    try {
      return in_domain(x, y);
    } catch (const Error&) {
      return false;
    }
  }
};

/// alpha^2 = a_ij y^i y^j and beta = b_i y^i as jets.
inline Jet quadratic_form(const JetMatrix& a, std::span<const Jet> y) {
  Jet sum = y[0] * 0.0;
  const int n = a.dim();
  for (int i = 0; i < n; ++i) {
    sum += a(i, i) * (y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < n; ++j) sum += 2.0 * a(i, j) * (y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)]);
  }
  return sum;
}

inline Jet linear_form(std::span<const Jet> b, std::span<const Jet> y) {
  Jet sum = y[0] * 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) sum += b[i] * y[i];
  return sum;
}

inline double quadratic_form(const Matrix& a, std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) s += a(i, j) * u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  return s;
}

/// F = alpha.
inline FinslerMetric riemannian_metric(const AlphaSpec& alpha) {
  FinslerMetric m;
  m.dim = alpha.dim();
  m.label = "riemann";
  m.squared_norm = [alpha](std::span<const Jet> x, std::span<const Jet> y) {
    return quadratic_form(alpha.eval(x), y);
  };
  m.in_domain = [alpha](std::span<const double> x, std::span<const double> y) {
    const Matrix a = alpha.eval(x);
    return is_positive_definite(a) && quadratic_form(a, y, y) > 0.0;
  };
  return m;
}

}  // namespace finsler
