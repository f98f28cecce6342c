#pragma once

// Builders and residual checkers for p-power (alpha, beta)-metrics:
// F = alpha (1 + beta/alpha)^p, the positivity criterion, the two-dimensional
// square-root family generated by (u, v, B), the Killing deformation of beta,
// and the Einstein-condition residuals for Randers and square metrics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "finsler/alphabeta.hpp"
#include "finsler/curvature.hpp"
#include "finsler/error.hpp"
#include "finsler/expr.hpp"
#include "finsler/jet.hpp"
#include "finsler/metric.hpp"
#include "finsler/sampling.hpp"

namespace finsler {

struct PPowerSpec {
  AlphaSpec alpha;
  BetaSpec beta;
  double p = 1.0;
};

/// F^2 = alpha^2 (1 + beta/alpha)^{2p} on alpha > 0, 1 + beta/alpha > 0.
inline FinslerMetric ppower_metric(const PPowerSpec& spec) {
  if (spec.p == 0.0) throw DomainError("exponent p must be nonzero");
  if (spec.alpha.dim() != spec.beta.dim()) throw IndexError("alpha and beta dimensions differ");
  FinslerMetric m;
  m.dim = spec.alpha.dim();
  const double two_p = 2.0 * spec.p;
  m.squared_norm = [alpha = spec.alpha, beta = spec.beta, two_p](std::span<const Jet> x, std::span<const Jet> y) {
    const Jet a2 = quadratic_form(alpha.eval(x), y);
    const Jet s = linear_form(beta.eval(x), y) / sqrt(a2);
    return a2 * pow(1.0 + s, two_p);
  };
  m.in_domain = [alpha = spec.alpha, beta = spec.beta](std::span<const double> x, std::span<const double> y) {
    const Matrix a = alpha.eval(x);
    const double a2 = quadratic_form(a, y, y);
    if (!(a2 > 0.0)) return false;
    const auto b = beta.eval(x);
    double bt = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) bt += b[i] * y[i];
    return 1.0 + bt / std::sqrt(a2) > 0.0;
  };
  char buf[64];
  std::snprintf(buf, sizeof buf, "ppower(p=%.17g)", spec.p);
  m.label = buf;
  return m;
}

/// Closed-form positivity bound on b^2 for phi = (1 + s)^p.
inline double positivity_bound(double p) {
  if (p == 0.0) throw DomainError("exponent p must be nonzero");
  if (p > 2.0 || p < 0.0) return 1.0 / ((p - 1.0) * (p - 1.0));
  if (p >= 0.5) return 1.0;
  return (2.0 - p) * (2.0 - p) / (4.0 * (1.0 - p * p) * (1.0 - p * p));
}

inline bool positivity_check(double p, double b_sq) {
  if (!(b_sq >= 0.0)) throw DomainError("b^2 must be nonnegative");
  return b_sq < positivity_bound(p);
}

struct PositivitySample {
  bool positive = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_s = 0.0;
};

/// Evaluates phi > 0, phi - s phi' > 0 and phi - s phi' + (b^2 - s^2) phi'' > 0
/// (together with 1 + s > 0) on `grid` evenly spaced s in [-b, b].
inline PositivitySample positivity_sample(double p, double b_sq, int grid = 101) {
  if (p == 0.0) throw DomainError("exponent p must be nonzero");
  if (!(b_sq >= 0.0)) throw DomainError("b^2 must be nonnegative");
  if (grid < 2) throw DomainError("grid needs at least two points");
  const double b = std::sqrt(b_sq);
  const PowerProfile phi{p};
  PositivitySample out;
  for (int k = 0; k < grid; ++k) {
    const double s = -b + 2.0 * b * k / (grid - 1);
    double margin;
    if (!(1.0 + s > 0.0)) {
      margin = 1.0 + s;
    } else {
      const double f = phi.phi(s), df = phi.dphi(s), ddf = phi.ddphi(s);
      margin = std::min({1.0 + s, f, f - s * df, f - s * df + (b_sq - s * s) * ddf});
    }
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_s = s;
    }
  }
  out.positive = out.worst_margin > 0.0;
  return out;
}

inline PositivitySample positivity_sample(const PPowerSpec& spec, std::span<const double> x, int grid = 101) {
  const Matrix a = spec.alpha.eval(x);
  const Matrix a_inv = inverse(a);
  const auto b = spec.beta.eval(x);
  return positivity_sample(spec.p, quadratic_form(a_inv, b, b), grid);
}

// ---------------------------------------------------------------------------
// Two-dimensional square-root family

struct Sqrt2dFamilySpec {
  Expr u, v, B;
};

struct Sqrt2dFamily {
  AlphaSpec alpha;
  BetaSpec beta;
  PPowerSpec metric_spec() const { return {alpha, beta, 0.5}; }
};

/// a_ij = B / ((1 - B)^{3/2} (u^2 + v^2)) delta_ij,
/// b_i  = B (u, v)_i / ((1 - B)^{3/4} (u^2 + v^2)).
inline Sqrt2dFamily sqrt2d_family(const Sqrt2dFamilySpec& spec) {
  const Expr den = pow(spec.u, Expr::number(2)) + pow(spec.v, Expr::number(2));
  const Expr w = Expr::number(1) - spec.B;
  const Expr factor = spec.B / (pow(w, Expr::number(1.5)) * den);
  const Expr scale = spec.B / (pow(w, Expr::number(0.75)) * den);
  return {AlphaSpec::conformal(2, factor), BetaSpec({scale * spec.u, scale * spec.v})};
}

struct FamilyJets {
  Jet u, v, B;
};

namespace detail {

inline FamilyJets family_jets(const Sqrt2dFamilySpec& spec, std::span<const double> x, int order) {
  if (x.size() != 2) throw IndexError("the square-root family lives on a 2D chart");
  auto ctx = JetContext::make(2, order);
  return {spec.u.eval_jet(ctx, x), spec.v.eval_jet(ctx, x), spec.B.eval_jet(ctx, x)};
}

inline double d2(const Jet& f, int a, int b) {
  std::vector<int> idx{0, 0};
  idx[static_cast<std::size_t>(a)] += 1;
  idx[static_cast<std::size_t>(b)] += 1;
  return f.partial(idx);
}

}  // namespace detail

/// Raises DomainError when x is outside 0 < B < 1 or u = v = 0, or within
/// `margin` of those singular sets.
inline void sqrt2d_check_point(const Sqrt2dFamilySpec& spec, std::span<const double> x, double margin = 0.0) {
  const double B = spec.B.eval(x), u = spec.u.eval(x), v = spec.v.eval(x);
  if (!(B > margin && B < 1.0 - margin)) throw DomainError("B outside (0, 1) at the point");
  if (!(u * u + v * v > std::max(margin * margin, 1e-300))) throw DomainError("u and v vanish at the point");
}

struct PdeResiduals {
  double cauchy_riemann_1 = 0.0;  ///< u_1 - v_2
  double cauchy_riemann_2 = 0.0;  ///< u_2 + v_1
  double level = 0.0;             ///< u B_1 + v B_2
  double max() const { return std::max({cauchy_riemann_1, cauchy_riemann_2, level}); }
};

inline PdeResiduals sqrt2d_pde_residuals(const Sqrt2dFamilySpec& spec, std::span<const double> x) {
  const auto j = detail::family_jets(spec, x, 1);
  const double u1 = j.u.gradient(0), u2 = j.u.gradient(1), v1 = j.v.gradient(0), v2 = j.v.gradient(1);
  const double uB1 = j.u.value() * j.B.gradient(0), vB2 = j.v.value() * j.B.gradient(1);
  return {std::abs(u1 - v2) / std::max({1.0, std::abs(u1), std::abs(v2)}),
          std::abs(u2 + v1) / std::max({1.0, std::abs(u2), std::abs(v1)}),
          std::abs(uB1 + vB2) / std::max({1.0, std::abs(uB1), std::abs(vB2)})};
}

/// Flag curvature of the family in terms of u, v, B:
/// K = -((u^2+v^2) sqrt(1-B) / (2 B^2)) (B_11 + B_22)
///     - ((u^2+v^2)^2 (3B - 2) / (4 B^3 sqrt(1-B))) (B_1 / v)^2.
inline double sqrt2d_flag_curvature(const Sqrt2dFamilySpec& spec, std::span<const double> x) {
  sqrt2d_check_point(spec, x);
  const auto j = detail::family_jets(spec, x, 2);
  const double u = j.u.value(), v = j.v.value(), B = j.B.value();
  if (std::abs(v) < 1e-12) throw DegenerateValue("the u, v, B curvature formula divides by v");
  const double w = u * u + v * v, root = std::sqrt(1.0 - B);
  const double lap = detail::d2(j.B, 0, 0) + detail::d2(j.B, 1, 1);
  const double B1v = j.B.gradient(0) / v;
  return -(w * root / (2.0 * B * B)) * lap - (w * w * (3.0 * B - 2.0) / (4.0 * B * B * B * root)) * B1v * B1v;
}

/// s_m s^m = (B - 4)^2 (u B_2 - v B_1)^2 / (64 B sqrt(1 - B)).
inline double sqrt2d_s_norm2(const Sqrt2dFamilySpec& spec, std::span<const double> x) {
  sqrt2d_check_point(spec, x);
  const auto j = detail::family_jets(spec, x, 1);
  const double B = j.B.value();
  const double c = j.u.value() * j.B.gradient(1) - j.v.value() * j.B.gradient(0);
  return (B - 4.0) * (B - 4.0) * c * c / (64.0 * B * std::sqrt(1.0 - B));
}

/// Diagnostic pairing |grad B| with the largest component of s_ij. Along
/// the family the two vanish together; reported, not enforced.
struct ClosednessDiagnostic {
  double grad_B = 0.0;
  double s_max = 0.0;
};

inline ClosednessDiagnostic sqrt2d_closedness(const Sqrt2dFamilySpec& spec, std::span<const double> x) {
  sqrt2d_check_point(spec, x);
  const auto j = detail::family_jets(spec, x, 1);
  const Sqrt2dFamily fam = sqrt2d_family(spec);
  return {std::hypot(j.B.gradient(0), j.B.gradient(1)), ab_tensors(fam.alpha, fam.beta, x).s.max_abs()};
}

/// Sectional curvature of alpha in terms of u, v, B:
/// lambda = -(u^2+v^2)/(4 B^2) { (B+2) sqrt(1-B) (B_11+B_22)
///          + (u^2+v^2)(B^2+4B-2) B_1^2 / (B v^2 sqrt(1-B)) }.
inline double sqrt2d_alpha_curvature(const Sqrt2dFamilySpec& spec, std::span<const double> x) {
  sqrt2d_check_point(spec, x);
  const auto j = detail::family_jets(spec, x, 2);
  const double u = j.u.value(), v = j.v.value(), B = j.B.value();
  if (std::abs(v) < 1e-12) throw DegenerateValue("the u, v, B curvature formula divides by v");
  const double w = u * u + v * v, root = std::sqrt(1.0 - B);
  const double lap = detail::d2(j.B, 0, 0) + detail::d2(j.B, 1, 1);
  const double B1 = j.B.gradient(0);
  return -(w / (4.0 * B * B)) * ((B + 2.0) * root * lap + w * (B * B + 4.0 * B - 2.0) * B1 * B1 / (B * v * v * root));
}

/// Gaussian curvature of e^{2 sigma} (dx^2 + dy^2): -e^{-2 sigma} (sigma_11 + sigma_22).
inline double conformal_curvature(const Expr& sigma, std::span<const double> x) {
  if (x.size() != 2) throw IndexError("conformal curvature formula is two-dimensional");
  const Jet s = sigma.eval_jet(JetContext::make(2, 2), x);
  return -std::exp(-2.0 * s.value()) * (detail::d2(s, 0, 0) + detail::d2(s, 1, 1));
}

inline double direction_scale(double a, double b) { return std::max({1.0, std::abs(a), std::abs(b)}); }

/// max over unit directions of |r_00 - 6 beta s_0 / (b^2 - 4)|, normalized.
inline double sqrt2d_einstein_residual(const AlphaSpec& alpha, const BetaSpec& beta, std::span<const double> x,
                                       int directions = 16) {
  if (alpha.dim() != 2) throw IndexError("this condition is two-dimensional");
  const auto T = ab_tensors(alpha, beta, x);
  if (std::abs(T.b2 - 4.0) < kDefaultDivisionFloor) throw DegenerateValue("b^2 = 4");
  double worst = 0.0;
  for (const auto& y : unit_directions(2, directions)) {
    const double lhs = T.r00(y), rhs = 6.0 * T.beta(y) * T.s0(y) / (T.b2 - 4.0);
    worst = std::max(worst, std::abs(lhs - rhs) / direction_scale(lhs, rhs));
  }
  return worst;
}

/// K = 2/(2 + b^2) (lambda - 8 s_m s^m / (b^2 (b^2 - 4))), lambda the
/// Gaussian curvature of alpha. Valid only where the Einstein condition
/// r_00 = 6 beta s_0 / (b^2 - 4) holds; NotEinstein otherwise.
inline double sqrt2d_K_from_lambda(const AlphaSpec& alpha, const BetaSpec& beta, std::span<const double> x,
                                   double tolerance = 1e-8) {
  const double residual = sqrt2d_einstein_residual(alpha, beta, x);
  if (!(residual < tolerance)) throw NotEinstein("r_00 = 6 beta s_0/(b^2 - 4) fails at the point");
  const auto [rd, T] = alpha_beta_data(alpha, beta, x);
  const double sn = T.s_norm2(rd.a_inv);
  if (sn == 0.0) return 2.0 / (2.0 + T.b2) * rd.sectional_curvature();
  const double den = T.b2 * (T.b2 - 4.0);
  if (std::abs(den) < kDefaultDivisionFloor) throw DegenerateValue("b^2 (b^2 - 4) vanishes");
  return 2.0 / (2.0 + T.b2) * (rd.sectional_curvature() - 8.0 * sn / den);
}

/// Residual of the two-dimensional identity s_ij = (b_i s_j - b_j s_i) / b^2.
inline double sqrt2d_s_identity_residual(const AbTensors& T) {
  if (T.n != 2) throw IndexError("the identity is two-dimensional");
  if (!(T.b2 > 0.0)) throw DegenerateValue("b^2 vanishes");
  double worst = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double rhs = (T.b(i) * T.s1(j) - T.b(j) * T.s1(i)) / T.b2;
      worst = std::max(worst, std::abs(T.s(i, j) - rhs) / direction_scale(T.s(i, j), rhs));
    }
  return worst;
}

// ---------------------------------------------------------------------------
// Killing deformation beta~ = (1 - b^2)^{-3/4} beta

struct KillingDeformation {
  std::vector<double> beta_tilde;  ///< b~_i at the point
  double b2 = 0.0;
  double beta_tilde_norm2 = 0.0;   ///< ||beta~||^2_alpha
  double r_tilde_max = 0.0;        ///< max |r~_ij|
  double expected_norm2() const { return b2 / std::pow(1.0 - b2, 1.5); }
};

inline KillingDeformation killing_deformation(const AlphaSpec& alpha, const BetaSpec& beta, std::span<const double> x) {
  detail::check_point(alpha, x);
  auto ctx = JetContext::make(alpha.dim(), 3);
  const auto xs = detail::coordinate_jets(ctx, x);
  const auto c = detail::connection(alpha, xs);
  const auto b = beta.eval(xs);
  const int n = alpha.dim();
  Jet b2 = Jet::constant(ctx, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b2 += c.a_inv(i, j) * b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
  if (!(b2.value() < 1.0)) throw DomainError("the deformation needs b^2 < 1");
  const Jet factor = pow(1.0 - b2, -0.75);
  std::vector<Jet> bt;
  for (const auto& bi : b) bt.push_back(factor * bi);
  const auto T = detail::ab_tensors_from_jets(c, bt);
  KillingDeformation out;
  out.b2 = b2.value();
  out.beta_tilde_norm2 = T.b2;
  out.r_tilde_max = T.r.max_abs();
  for (int i = 0; i < n; ++i) out.beta_tilde.push_back(T.b(i));
  return out;
}

// ---------------------------------------------------------------------------
// Einstein-condition residuals

struct EinsteinConditionReport {
  std::string condition;
  std::vector<std::map<std::string, double>> point_scalars;  ///< per evaluated point
  std::map<std::string, double> residuals;                   ///< max over points
  std::vector<std::string> skipped;                          ///< reasons, one per skipped point
  double tolerance = 1e-7;
  bool verdict = true;

  void record(const std::string& name, double value) {
    auto& slot = residuals[name];
    slot = std::max(slot, value);
  }
  void finish() {
    verdict = !residuals.empty();
    for (const auto& [name, value] : residuals)
      if (!(value < tolerance)) verdict = false;
  }
};

namespace detail {

inline double sym_form_residual(const Tensor2& lhs, const Tensor2& rhs) {
  double worst = 0.0, scale = 1.0;
  for (int i = 0; i < lhs.dim(); ++i)
    for (int j = 0; j < lhs.dim(); ++j) {
      worst = std::max(worst, std::abs(lhs(i, j) - rhs(i, j)));
      scale = std::max({scale, std::abs(lhs(i, j)), std::abs(rhs(i, j))});
    }
  return worst / scale;
}

/// max over directions of |Ric_F - target(y)| / max(1, |Ric_F|, |target|).
template <class Target>
double ricci_residual(const FinslerMetric& metric, std::span<const double> x, int directions, Target target) {
  double worst = 0.0;
  for (const auto& y : unit_directions(metric.dim, directions)) {
    if (!metric.admits(x, y)) continue;
    const auto cp = curvature_point(metric, {std::vector<double>(x.begin(), x.end()), y});
    const double t = target(cp);
    worst = std::max(worst, std::abs(cp.ricci - t) / direction_scale(cp.ricci, t));
  }
  return worst;
}

}  // namespace detail

/// Randers F = alpha + beta. Estimates c = r^k_k / (2(n - b^2)) and
/// sigma = [2 b^j s^k_{j|k}/(n-1) - 2 b^j t_j - b^j c_j] / (2 b^2), then
/// reports the residuals of
///   r_ij = -(b_i s_j + b_j s_i) + 2c (a_ij - b_i b_j)                (isotropic_s)
///   s^k_{j|k} = (n-1)/2 (2 sigma b_j + 2 t_j + 4c s_j + c_j)         (divergence)
///   Ric_ij = 2t_ij + t^k_k a_ij + (n-1)[sigma(a_ij + b_i b_j) - 4c^2 a_ij
///            - s_(i|j) - s_i s_j - c_(i b_j)]                         (alpha_ricci)
///   Ric_F = (n-1)(sigma - c^2) F^2                                    (einstein)
inline EinsteinConditionReport randers_einstein_residuals(const AlphaSpec& alpha, const BetaSpec& beta,
                                                          const std::vector<std::vector<double>>& points,
                                                          int directions = 16, double tolerance = 1e-7) {
  EinsteinConditionReport rep;
  rep.condition = "randers_einstein";
  rep.tolerance = tolerance;
  const int n = alpha.dim();
  if (n < 2) throw DomainError("Einstein conditions need n >= 2");
  const FinslerMetric F = ppower_metric({alpha, beta, 1.0});
  for (const auto& x : points) {
    try {
      const auto [rd, T] = alpha_beta_data(alpha, beta, x);
      if (!(T.b2 < 1.0)) throw DomainError("Randers metrics need b^2 < 1");
      if (!(T.b2 > 1e-12)) throw DegenerateValue("sigma estimator needs b^2 > 0");
      const double D = 2.0 * (n - T.b2);
      const double c = T.r_trace / D;
      std::vector<double> ci(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) ci[static_cast<std::size_t>(i)] = T.grad_r_trace(i) / D + 2.0 * T.r_trace * T.grad_b2(i) / (D * D);
      const auto sdiv = T.s_div_covector(rd.a_inv);
      double b_sdiv = 0.0, b_t = 0.0, b_c = 0.0;
      for (int j = 0; j < n; ++j) {
        b_sdiv += T.b_up(j) * sdiv[static_cast<std::size_t>(j)];
        b_t += T.b_up(j) * T.t1(j);
        b_c += T.b_up(j) * ci[static_cast<std::size_t>(j)];
      }
      const double sigma = (2.0 * b_sdiv / (n - 1) - 2.0 * b_t - b_c) / (2.0 * T.b2);

      Tensor2 rhs8(n), ric_rhs(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double aij = rd.a(i, j), bij = T.b(i) * T.b(j);
          rhs8(i, j) = -(T.b(i) * T.s1(j) + T.b(j) * T.s1(i)) + 2.0 * c * (aij - bij);
          ric_rhs(i, j) = 2.0 * T.t(i, j) + T.t_trace * aij +
                          (n - 1) * (sigma * (aij + bij) - 4.0 * c * c * aij - 0.5 * (T.s1_cov(i, j) + T.s1_cov(j, i)) -
                                     T.s1(i) * T.s1(j) - 0.5 * (ci[static_cast<std::size_t>(i)] * T.b(j) + ci[static_cast<std::size_t>(j)] * T.b(i)));
        }
      rep.record("isotropic_s", detail::sym_form_residual(T.r, rhs8));
      {
        double worst = 0.0, scale = 1.0;
        for (int j = 0; j < n; ++j) {
          const double rhs = 0.5 * (n - 1) * (2.0 * sigma * T.b(j) + 2.0 * T.t1(j) + 4.0 * c * T.s1(j) + ci[static_cast<std::size_t>(j)]);
          worst = std::max(worst, std::abs(sdiv[static_cast<std::size_t>(j)] - rhs));
          scale = std::max({scale, std::abs(sdiv[static_cast<std::size_t>(j)]), std::abs(rhs)});
        }
        rep.record("divergence", worst / scale);
      }
      rep.record("alpha_ricci", detail::sym_form_residual(rd.ricci, ric_rhs));
      const double k = (n - 1) * (sigma - c * c);
      rep.record("einstein", detail::ricci_residual(F, x, directions, [k](const CurvaturePoint& cp) { return k * cp.F * cp.F; }));
      rep.point_scalars.push_back({{"b2", T.b2}, {"c", c}, {"sigma", sigma}, {"lambda", sigma - c * c}});
    } catch (const Error& e) {
      rep.skipped.push_back(e.what());
    }
  }
  rep.finish();
  return rep;
}

/// Square metric F = (alpha + beta)^2 / alpha. Estimates
/// c = r^k_k / (n(1 + 2b^2) - 3b^2) and reports the residuals of
///   b_{i|j} = c[(1 + 2b^2) a_ij - 3 b_i b_j]                               (closure)
///   Ric_ij = -c^2 {[2(2n-5) b^2 + 5(n-1)] a_ij - 6(n-2) b_i b_j}           (alpha_ricci)
///   c_i = -2 c^2 b_i                                                        (gradient)
/// and the size of Ric_F itself (ricci_flat).
inline EinsteinConditionReport square_einstein_residuals(const AlphaSpec& alpha, const BetaSpec& beta,
                                                         const std::vector<std::vector<double>>& points,
                                                         int directions = 16, double tolerance = 1e-7) {
  EinsteinConditionReport rep;
  rep.condition = "square_einstein";
  rep.tolerance = tolerance;
  const int n = alpha.dim();
  if (n < 2) throw DomainError("Einstein conditions need n >= 2");
  const FinslerMetric F = ppower_metric({alpha, beta, 2.0});
  for (const auto& x : points) {
    try {
      const auto [rd, T] = alpha_beta_data(alpha, beta, x);
      if (!(T.b2 < 1.0)) throw DomainError("square metrics are admitted with b^2 < 1");
      const double D = n + (2.0 * n - 3.0) * T.b2;
      const double c = T.r_trace / D;
      Tensor2 closure(n), ric(n);
      double grad_worst = 0.0, grad_scale = 1.0;
      for (int i = 0; i < n; ++i) {
        const double ci = T.grad_r_trace(i) / D - T.r_trace * (2.0 * n - 3.0) * T.grad_b2(i) / (D * D);
        grad_worst = std::max(grad_worst, std::abs(ci + 2.0 * c * c * T.b(i)));
        grad_scale = std::max({grad_scale, std::abs(ci), std::abs(2.0 * c * c * T.b(i))});
        for (int j = 0; j < n; ++j) {
          const double aij = rd.a(i, j), bij = T.b(i) * T.b(j);
          closure(i, j) = c * ((1.0 + 2.0 * T.b2) * aij - 3.0 * bij);
          ric(i, j) = -c * c * ((2.0 * (2 * n - 5) * T.b2 + 5.0 * (n - 1)) * aij - 6.0 * (n - 2) * bij);
        }
      }
      rep.record("closure", detail::sym_form_residual(T.b_cov, closure));
      rep.record("alpha_ricci", detail::sym_form_residual(rd.ricci, ric));
      rep.record("gradient", grad_worst / grad_scale);
      rep.record("ricci_flat", detail::ricci_residual(F, x, directions, [](const CurvaturePoint&) { return 0.0; }));
      rep.point_scalars.push_back({{"b2", T.b2}, {"c", c}});
    } catch (const Error& e) {
      rep.skipped.push_back(e.what());
    }
  }
  rep.finish();
  return rep;
}

struct RicciFlatParallel {
  bool verdict = true;
  double max_b_cov = 0.0;   ///< max |b_{i|j}|
  double max_ricci = 0.0;   ///< max |Ric_alpha(y)| over unit directions
};

/// alpha Ricci-flat and beta parallel on the sampled points.
inline RicciFlatParallel ricci_flat_parallel_check(const AlphaSpec& alpha, const BetaSpec& beta,
                                                   const std::vector<std::vector<double>>& points,
                                                   int directions = 16, double tolerance = 1e-9) {
  RicciFlatParallel out;
  const auto dirs = unit_directions(alpha.dim(), directions);
  for (const auto& x : points) {
    const auto [rd, T] = alpha_beta_data(alpha, beta, x);
    out.max_b_cov = std::max(out.max_b_cov, T.b_cov.max_abs());
    for (const auto& y : dirs) out.max_ricci = std::max(out.max_ricci, std::abs(rd.ricci_form(y)));
  }
  out.verdict = out.max_b_cov < tolerance && out.max_ricci < tolerance;
  return out;
}

}  // namespace finsler
