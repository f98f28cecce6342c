#pragma once

// Generic Finsler curvature engine. Everything is derived from jets of F^2 in
// the 2n variables (x, y): the fundamental tensor, the geodesic spray G^i, the
// Riemann curvature R^i_k, the Ricci curvature, and the Einstein scalar.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"
#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"
#include "finsler/sampling.hpp"

namespace finsler {

struct CurvaturePoint {
  TangentSample sample;
  double F = 0.0;
  Matrix g;
  Matrix g_inv;
  std::vector<double> spray;
  Matrix riemann;  ///< R^i_k, row i, column k
  double ricci = 0.0;
  double einstein_scalar = 0.0;
};

namespace detail {

struct SprayJets {
  Jet F2;
  Matrix g;
  Matrix g_inv;
  std::vector<Jet> G;  ///< order (jet order - 2) in the 2n variables
};

inline void check_sample(const FinslerMetric& metric, const TangentSample& s) {
  const auto n = static_cast<std::size_t>(metric.dim);
  if (s.x.size() != n || s.y.size() != n)
    throw IndexError("tangent sample dimension does not match the metric");
  if (std::all_of(s.y.begin(), s.y.end(), [](double v) { return v == 0.0; }))
    throw DomainError("direction y must be nonzero");
  if (!metric.admits(s.x, s.y)) throw DomainError("tangent sample outside the metric's domain");
}

/// G^i = 1/4 g^{il} ([F^2]_{x^k y^l} y^k - [F^2]_{x^l}) as jets of order - 2.
inline SprayJets spray_jets(const FinslerMetric& metric, const TangentSample& s, int order) {
  check_sample(metric, s);
  const int n = metric.dim;
  auto ctx = JetContext::make(2 * n, order);
  std::vector<Jet> x, y;
  for (int i = 0; i < n; ++i) {
    x.push_back(Jet::variable(ctx, i, s.x[static_cast<std::size_t>(i)]));
    y.push_back(Jet::variable(ctx, n + i, s.y[static_cast<std::size_t>(i)]));
  }
  SprayJets out{metric.squared_norm(x, y), {}, {}, {}};
  if (!(out.F2.value() > 0.0)) throw DomainError("F^2 is not positive at the sample");

  std::vector<Jet> dF2_dy, dF2_dx;
  for (int i = 0; i < n; ++i) {
    dF2_dy.push_back(out.F2.derivative(n + i));
    dF2_dx.push_back(out.F2.derivative(i).truncate(order - 2));
  }

  JetMatrix g(n, Jet());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      g(i, j) = 0.5 * dF2_dy[static_cast<std::size_t>(i)].derivative(n + j);
      if (j != i) g(j, i) = g(i, j);
    }
  out.g = values(g);
  if (!is_positive_definite(out.g)) throw SingularMetric("fundamental tensor is not positive definite");
  const JetMatrix g_inv = inverse(g);
  out.g_inv = values(g_inv);

  auto low = g(0, 0).context();
  std::vector<Jet> y_low;
  for (int i = 0; i < n; ++i) y_low.push_back(Jet::variable(low, n + i, s.y[static_cast<std::size_t>(i)]));

  std::vector<Jet> h;
  for (int l = 0; l < n; ++l) {
    Jet term = -dF2_dx[static_cast<std::size_t>(l)];
    for (int k = 0; k < n; ++k)
      term += dF2_dy[static_cast<std::size_t>(l)].derivative(k) * y_low[static_cast<std::size_t>(k)];
    h.push_back(std::move(term));
  }
  for (int i = 0; i < n; ++i) {
    Jet gi = Jet::constant(low, 0.0);
    for (int l = 0; l < n; ++l) gi += g_inv(i, l) * h[static_cast<std::size_t>(l)];
    out.G.push_back(0.25 * gi);
  }
  return out;
}

inline double second_partial(const Jet& f, int a, int b) {
  std::vector<int> alpha(static_cast<std::size_t>(f.context()->num_vars()), 0);
  alpha[static_cast<std::size_t>(a)] += 1;
  alpha[static_cast<std::size_t>(b)] += 1;
  return f.partial(alpha);
}

}  // namespace detail

/// g_ij = 1/2 [F^2]_{y^i y^j} and its inverse.
inline std::pair<Matrix, Matrix> fundamental_tensor(const FinslerMetric& metric, const TangentSample& s) {
  auto jets = detail::spray_jets(metric, s, 2);
  return {jets.g, jets.g_inv};
}

inline std::vector<double> spray(const FinslerMetric& metric, const TangentSample& s) {
  auto jets = detail::spray_jets(metric, s, 2);
  std::vector<double> G;
  for (const auto& gi : jets.G) G.push_back(gi.value());
  return G;
}

/// Spray, Riemann curvature, Ricci curvature and Einstein scalar at one sample.
inline CurvaturePoint curvature_point(const FinslerMetric& metric, const TangentSample& s) {
  const int n = metric.dim;
  auto jets = detail::spray_jets(metric, s, 4);
  CurvaturePoint cp;
  cp.sample = s;
  cp.F = std::sqrt(jets.F2.value());
  cp.g = jets.g;
  cp.g_inv = jets.g_inv;
  for (const auto& gi : jets.G) cp.spray.push_back(gi.value());

  // R^i_k = 2 G^i_{x^k} - y^j G^i_{x^j y^k} + 2 G^j G^i_{y^j y^k} - G^i_{y^j} G^j_{y^k}
  cp.riemann = Matrix(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const Jet& Gi = jets.G[static_cast<std::size_t>(i)];
    for (int k = 0; k < n; ++k) {
      double r = 2.0 * Gi.gradient(k);
      for (int j = 0; j < n; ++j) {
        const Jet& Gj = jets.G[static_cast<std::size_t>(j)];
        r -= s.y[static_cast<std::size_t>(j)] * detail::second_partial(Gi, j, n + k);
        r += 2.0 * Gj.value() * detail::second_partial(Gi, n + j, n + k);
        r -= Gi.gradient(n + j) * Gj.gradient(n + k);
      }
      cp.riemann(i, k) = r;
    }
  }
  for (int k = 0; k < n; ++k) cp.ricci += cp.riemann(k, k);
  cp.einstein_scalar = n > 1 ? cp.ricci / ((n - 1) * jets.F2.value()) : 0.0;
  return cp;
}

inline Matrix riemann_curvature(const FinslerMetric& metric, const TangentSample& s) {
  return curvature_point(metric, s).riemann;
}

inline double ricci(const FinslerMetric& metric, const TangentSample& s) {
  return curvature_point(metric, s).ricci;
}

/// lambda with Ric = (n - 1) lambda F^2.
inline double einstein_scalar(const FinslerMetric& metric, const TangentSample& s) {
  if (metric.dim < 2) throw DomainError("Einstein scalar needs dimension >= 2");
  return curvature_point(metric, s).einstein_scalar;
}

/// |lambda(x, y) - lambda(x, -y)|.
inline double reversibility_residual(const FinslerMetric& metric, const TangentSample& s) {
  TangentSample reversed{s.x, s.y};
  for (double& v : reversed.y) v = -v;
  if (!metric.admits(reversed.x, reversed.y))
    throw DomainError("reversed direction leaves the metric's domain");
  return std::abs(einstein_scalar(metric, s) - einstein_scalar(metric, reversed));
}

/// Flag curvature of the plane span(y, u) from an already computed point.
inline double flag_curvature(const CurvaturePoint& cp, std::span<const double> u) {
  const int n = cp.g.dim();
  std::vector<double> Ru(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) Ru[static_cast<std::size_t>(i)] += cp.riemann(i, k) * u[static_cast<std::size_t>(k)];
  const double guu = quadratic_form(cp.g, u, u);
  const double gyu = quadratic_form(cp.g, cp.sample.y, u);
  const double denom = cp.F * cp.F * guu - gyu * gyu;
  if (!(denom > 1e-12 * cp.F * cp.F * guu)) throw DegeneratePlane("direction u is (nearly) parallel to y");
  return quadratic_form(cp.g, Ru, u) / denom;
}

inline double flag_curvature(const FinslerMetric& metric, const TangentSample& s, std::span<const double> u) {
  if (static_cast<int>(u.size()) != metric.dim) throw IndexError("transverse direction has wrong dimension");
  return flag_curvature(curvature_point(metric, s), u);
}

struct EinsteinCheckResult {
  bool verdict = true;
  double max_spread = 0.0;
  std::vector<double> spreads;      ///< per point
  std::vector<double> mean_lambda;  ///< per point, over admissible directions
  int skipped_directions = 0;
};

/// Samples `directions_per_point` unit directions (filtered by the domain) at
/// each point; the metric passes when lambda varies by less than `tolerance`.
inline EinsteinCheckResult einstein_check(const FinslerMetric& metric, const std::vector<std::vector<double>>& points,
                                          int directions_per_point, double tolerance = 1e-7) {
  EinsteinCheckResult result;
  const auto dirs = unit_directions(metric.dim, directions_per_point);
  for (const auto& x : points) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    int used = 0;
    for (const auto& y : dirs) {
      if (!metric.admits(x, y)) {
        ++result.skipped_directions;
        continue;
      }
      const double lambda = einstein_scalar(metric, {x, y});
      lo = std::min(lo, lambda);
      hi = std::max(hi, lambda);
      sum += lambda;
      ++used;
    }
    if (used == 0) throw DomainError("no admissible direction at a sample point");
    const double spread = hi - lo;
    result.spreads.push_back(spread);
    result.mean_lambda.push_back(sum / used);
    result.max_spread = std::max(result.max_spread, spread);
  }
  result.verdict = result.max_spread < tolerance;
  return result;
}

}  // namespace finsler
