#pragma once

// Riemannian and (alpha, beta) tensor machinery, computed directly from the
// coordinate expressions of a_ij(x) and b_i(x) with Levi-Civita covariant
// derivatives. Nothing here evaluates a Finsler metric, so it serves as an
// independent route against the generic curvature engine.
//
// Index conventions: indices are raised and lowered with a_ij; b_{i|j} is the
// covariant derivative of b_i in direction j; T_{i0} = T_ij y^j. The Riemann
// tensor is stored fully lowered with R_ijkl = K (a_ik a_jl - a_il a_jk) for
// constant sectional curvature K, and Ric_jl = a^{ik} R_ijkl.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"
#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"

namespace finsler {

template <int Rank>
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(int n) : n_(n), data_(static_cast<std::size_t>(ipow(n, Rank)), 0.0) {}

  int dim() const noexcept { return n_; }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

private:
  static int ipow(int n, int r) { return r == 0 ? 1 : n * ipow(n, r - 1); }
  template <class... I>
  std::size_t offset(I... idx) const {
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int n_ = 0;
  std::vector<double> data_;
};

using Tensor1 = Tensor<1>;
using Tensor2 = Tensor<2>;
using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;

/// Levi-Civita data of alpha at a point.
struct RiemannData {
  int n = 0;
  Tensor2 a;
  Tensor2 a_inv;
  Tensor3 christoffel;  ///< Gamma^i_jk
  Tensor4 riemann;      ///< R_ijkl, all lowered
  Tensor2 ricci;        ///< Ric_jl

  /// Ric_alpha(y) = Ric_ij y^i y^j.
  double ricci_form(std::span<const double> y) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += ricci(i, j) * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    return s;
  }

  /// Sectional curvature of the coordinate plane (0, 1); in two dimensions
  /// this is the Gaussian curvature.
  double sectional_curvature() const {
    const double area = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
    return riemann(0, 1, 0, 1) / area;
  }

  /// Residual of R_ijkl + R_iklj + R_iljk = 0.
  double bianchi_residual() const {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            worst = std::max(worst, std::abs(riemann(i, j, k, l) + riemann(i, k, l, j) + riemann(i, l, j, k)));
    return worst / std::max(1.0, riemann.max_abs());
  }
};

/// The (alpha, beta) tensor family at a point, with every covariant derivative
/// the structural formulas need.
struct AbTensors {
  int n = 0;
  Tensor1 b, b_up;
  double b2 = 0.0;
  Tensor1 grad_b2;
  Tensor2 b_cov;  ///< b_{i|j}
  Tensor2 r, s;   ///< symmetric and antisymmetric parts of b_{i|j}
  Tensor2 r_up, s_up;  ///< r^i_j, s^i_j
  Tensor2 q, t;        ///< q_ij = r_im s^m_j, t_ij = s_im s^m_j
  Tensor1 r1, s1, q1, t1;  ///< r_j, s_j, q_j, t_j (contracted with b^i)
  double r_trace = 0.0;    ///< r^k_k
  double t_trace = 0.0;    ///< t^k_k
  double rr_trace = 0.0;   ///< r^i_j r^j_i
  Tensor1 grad_r_trace;    ///< (r^k_k)_{,i} = r^k_{k|i}
  Tensor3 r_cov, s_cov;    ///< r_{ij|k}, s_{ij|k}
  Tensor2 s1_cov;          ///< s_{j|k}
  Tensor2 r1_cov;          ///< r_{j|k}
  double s_div = 0.0;      ///< s^k_{|k}
  double r_div = 0.0;      ///< r^k_{|k}

  double beta(std::span<const double> y) const { return contract(b, y); }
  double r00(std::span<const double> y) const { return form(r, y); }
  double s0(std::span<const double> y) const { return contract(s1, y); }
  double t0(std::span<const double> y) const { return contract(t1, y); }
  double q00(std::span<const double> y) const { return form(q, y); }
  double t00(std::span<const double> y) const { return form(t, y); }

  /// s^i_0
  std::vector<double> s_up0(std::span<const double> y) const {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i)] += s_up(i, j) * y[static_cast<std::size_t>(j)];
    return out;
  }

  /// r_{00|0}
  double r00_0(std::span<const double> y) const {
    double v = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          v += r_cov(i, j, k) * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(k)];
    return v;
  }

  /// s_{0|0}
  double s0_0(std::span<const double> y) const { return form(s1_cov, y); }

  /// s^k_{j|k}, the covector whose contraction with y is s^k_{0|k}.
  std::vector<double> s_div_covector(const Tensor2& a_inv) const {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(j)] += a_inv(k, i) * s_cov(i, j, k);
    return out;
  }

  /// s_m s^m
  double s_norm2(const Tensor2& a_inv) const {
    double v = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v += a_inv(i, j) * s1(i) * s1(j);
    return v;
  }

  double contract(const Tensor1& v, std::span<const double> y) const {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += v(i) * y[static_cast<std::size_t>(i)];
    return sum;
  }
  double form(const Tensor2& m, std::span<const double> y) const {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sum += m(i, j) * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    return sum;
  }
};

namespace detail {

/// Jet-valued Levi-Civita connection of alpha at a point.
struct ConnectionJets {
  int n = 0;
  JetMatrix a;      // order 3
  JetMatrix a_inv;  // order 3
  std::vector<Jet> gamma;  // Gamma^i_jk, order 2, flat (i*n + j)*n + k

  const Jet& Gamma(int i, int j, int k) const { return gamma[static_cast<std::size_t>((i * n + j) * n + k)]; }
};

inline Jet tr(const Jet& j, int order) { return j.order() == order ? j : j.truncate(order); }

inline std::vector<Jet> coordinate_jets(const JetContextPtr& ctx, std::span<const double> x) {
  std::vector<Jet> out;
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back(Jet::variable(ctx, static_cast<int>(i), x[i]));
  return out;
}

inline ConnectionJets connection(const AlphaSpec& alpha, std::span<const Jet> x) {
  ConnectionJets c;
  c.n = alpha.dim();
  const int n = c.n;
  c.a = alpha.eval(x);
  if (!is_positive_definite(c.a)) throw NotPositiveDefinite("a_ij is not positive definite at the point");
  c.a_inv = inverse(c.a);
  const int ord = x[0].order() - 1;
  // da[(l*n + k)*n + j] = d_j a_lk
  std::vector<Jet> da;
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) da.push_back(c.a(l, k).derivative(j));
  auto D = [&](int l, int k, int j) -> const Jet& { return da[static_cast<std::size_t>((l * n + k) * n + j)]; };
  c.gamma.reserve(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet sum = Jet::constant(da[0].context(), 0.0);
        for (int l = 0; l < n; ++l) sum += tr(c.a_inv(i, l), ord) * (D(l, k, j) + D(l, j, k) - D(j, k, l));
        c.gamma.push_back(0.5 * sum);
      }
  return c;
}

/// v_{i|k} = d_k v_i - Gamma^m_ik v_m, one order below the input.
inline std::vector<Jet> covector_derivative(const ConnectionJets& c, std::span<const Jet> v) {
  const int n = c.n;
  const int ord = v[0].order() - 1;
  std::vector<Jet> out;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      Jet d = v[static_cast<std::size_t>(i)].derivative(k);
      for (int m = 0; m < n; ++m) d -= tr(c.Gamma(m, i, k), ord) * tr(v[static_cast<std::size_t>(m)], ord);
      out.push_back(std::move(d));
    }
  return out;
}

/// T_{ij|k} for a flat (i*n + j) 2-tensor, one order below the input.
inline std::vector<Jet> two_tensor_derivative(const ConnectionJets& c, std::span<const Jet> T) {
  const int n = c.n;
  const int ord = T[0].order() - 1;
  auto at = [&](int i, int j) { return tr(T[static_cast<std::size_t>(i * n + j)], ord); };
  std::vector<Jet> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet d = T[static_cast<std::size_t>(i * n + j)].derivative(k);
        for (int m = 0; m < n; ++m) {
          d -= tr(c.Gamma(m, i, k), ord) * at(m, j);
          d -= tr(c.Gamma(m, j, k), ord) * at(i, m);
        }
        out.push_back(std::move(d));
      }
  return out;
}

/// V^k_{|k} for a contravariant vector field.
inline double divergence(const ConnectionJets& c, std::span<const Jet> V) {
  double div = 0.0;
  for (int k = 0; k < c.n; ++k) {
    div += V[static_cast<std::size_t>(k)].gradient(k);
    for (int m = 0; m < c.n; ++m) div += c.Gamma(k, k, m).value() * V[static_cast<std::size_t>(m)].value();
  }
  return div;
}

inline RiemannData riemann_values(const ConnectionJets& c) {
  const int n = c.n;
  RiemannData rd;
  rd.n = n;
  rd.a = Tensor2(n);
  rd.a_inv = Tensor2(n);
  rd.christoffel = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      rd.a(i, j) = c.a(i, j).value();
      rd.a_inv(i, j) = c.a_inv(i, j).value();
      for (int k = 0; k < n; ++k) rd.christoffel(i, j, k) = c.Gamma(i, j, k).value();
    }
  // R^i_jkl = d_k Gamma^i_lj - d_l Gamma^i_kj + Gamma^i_km Gamma^m_lj - Gamma^i_lm Gamma^m_kj
  Tensor4 up(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = c.Gamma(i, l, j).gradient(k) - c.Gamma(i, k, j).gradient(l);
          for (int m = 0; m < n; ++m)
            v += rd.christoffel(i, k, m) * rd.christoffel(m, l, j) - rd.christoffel(i, l, m) * rd.christoffel(m, k, j);
          up(i, j, k, l) = v;
        }
  rd.riemann = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int m = 0; m < n; ++m) v += rd.a(i, m) * up(m, j, k, l);
          rd.riemann(i, j, k, l) = v;
        }
  rd.ricci = Tensor2(n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) v += rd.a_inv(i, k) * rd.riemann(i, j, k, l);
      rd.ricci(j, l) = v;
    }
  return rd;
}

inline void check_point(const AlphaSpec& alpha, std::span<const double> x) {
  if (static_cast<int>(x.size()) != alpha.dim()) throw IndexError("point dimension does not match alpha");
}

/// Tensor bundle for an arbitrary covector field given as jets (order >= 3).
inline AbTensors ab_tensors_from_jets(const ConnectionJets& c, std::span<const Jet> b_jets) {
  const int n = c.n;
  AbTensors T;
  T.n = n;
  const int ob = b_jets[0].order();  // 3

  std::vector<Jet> b_up_j;
  for (int i = 0; i < n; ++i) {
    Jet v = Jet::constant(b_jets[0].context(), 0.0);
    for (int j = 0; j < n; ++j) v += tr(c.a_inv(i, j), ob) * b_jets[static_cast<std::size_t>(j)];
    b_up_j.push_back(std::move(v));
  }
  Jet b2 = Jet::constant(b_jets[0].context(), 0.0);
  for (int i = 0; i < n; ++i) b2 += b_up_j[static_cast<std::size_t>(i)] * b_jets[static_cast<std::size_t>(i)];

  const auto bcov = covector_derivative(c, b_jets);  // order ob - 1
  const int o2 = ob - 1;
  std::vector<Jet> r_j, s_j;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Jet& bij = bcov[static_cast<std::size_t>(i * n + j)];
      const Jet& bji = bcov[static_cast<std::size_t>(j * n + i)];
      r_j.push_back(0.5 * (bij + bji));
      s_j.push_back(0.5 * (bij - bji));
    }
  // s_j = b^i s_ij, r_j = b^i r_ij as jets (order o2)
  std::vector<Jet> s1_j, r1_j;
  for (int j = 0; j < n; ++j) {
    Jet sv = Jet::constant(r_j[0].context(), 0.0), rv = sv;
    for (int i = 0; i < n; ++i) {
      sv += tr(b_up_j[static_cast<std::size_t>(i)], o2) * s_j[static_cast<std::size_t>(i * n + j)];
      rv += tr(b_up_j[static_cast<std::size_t>(i)], o2) * r_j[static_cast<std::size_t>(i * n + j)];
    }
    s1_j.push_back(std::move(sv));
    r1_j.push_back(std::move(rv));
  }
  // r^k_k as a jet
  Jet r_tr = Jet::constant(r_j[0].context(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r_tr += tr(c.a_inv(i, j), o2) * r_j[static_cast<std::size_t>(i * n + j)];
  // raised vectors s^k = a^{kj} s_j, r^k = a^{kj} r_j
  std::vector<Jet> s_vec, r_vec;
  for (int k = 0; k < n; ++k) {
    Jet sv = Jet::constant(r_j[0].context(), 0.0), rv = sv;
    for (int j = 0; j < n; ++j) {
      sv += tr(c.a_inv(k, j), o2) * s1_j[static_cast<std::size_t>(j)];
      rv += tr(c.a_inv(k, j), o2) * r1_j[static_cast<std::size_t>(j)];
    }
    s_vec.push_back(std::move(sv));
    r_vec.push_back(std::move(rv));
  }

  const auto r_cov = two_tensor_derivative(c, r_j);
  const auto s_cov = two_tensor_derivative(c, s_j);
  const auto s1_cov = covector_derivative(c, s1_j);
  const auto r1_cov = covector_derivative(c, r1_j);

  T.b = Tensor1(n);
  T.b_up = Tensor1(n);
  T.grad_b2 = Tensor1(n);
  T.b_cov = Tensor2(n);
  T.r = Tensor2(n);
  T.s = Tensor2(n);
  T.r_cov = Tensor3(n);
  T.s_cov = Tensor3(n);
  T.s1_cov = Tensor2(n);
  T.r1_cov = Tensor2(n);
  T.grad_r_trace = Tensor1(n);
  T.b2 = b2.value();
  for (int i = 0; i < n; ++i) {
    T.b(i) = b_jets[static_cast<std::size_t>(i)].value();
    T.b_up(i) = b_up_j[static_cast<std::size_t>(i)].value();
    T.grad_b2(i) = b2.gradient(i);
    T.grad_r_trace(i) = r_tr.gradient(i);
    for (int j = 0; j < n; ++j) {
      T.b_cov(i, j) = bcov[static_cast<std::size_t>(i * n + j)].value();
      T.r(i, j) = r_j[static_cast<std::size_t>(i * n + j)].value();
      T.s(i, j) = s_j[static_cast<std::size_t>(i * n + j)].value();
      T.s1_cov(i, j) = s1_cov[static_cast<std::size_t>(i * n + j)].value();
      T.r1_cov(i, j) = r1_cov[static_cast<std::size_t>(i * n + j)].value();
      for (int k = 0; k < n; ++k) {
        T.r_cov(i, j, k) = r_cov[static_cast<std::size_t>((i * n + j) * n + k)].value();
        T.s_cov(i, j, k) = s_cov[static_cast<std::size_t>((i * n + j) * n + k)].value();
      }
    }
  }
  T.s_div = divergence(c, s_vec);
  T.r_div = divergence(c, r_vec);
  T.r_trace = r_tr.value();

  auto a_inv = [&](int i, int j) { return c.a_inv(i, j).value(); };
  T.r_up = Tensor2(n);
  T.s_up = Tensor2(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        T.r_up(i, j) += a_inv(i, k) * T.r(k, j);
        T.s_up(i, j) += a_inv(i, k) * T.s(k, j);
      }
  T.q = Tensor2(n);
  T.t = Tensor2(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) {
        T.q(i, j) += T.r(i, m) * T.s_up(m, j);
        T.t(i, j) += T.s(i, m) * T.s_up(m, j);
      }
  T.r1 = Tensor1(n);
  T.s1 = Tensor1(n);
  T.q1 = Tensor1(n);
  T.t1 = Tensor1(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      T.r1(j) += T.b_up(i) * T.r(i, j);
      T.s1(j) += T.b_up(i) * T.s(i, j);
      T.q1(j) += T.b_up(i) * T.q(i, j);
      T.t1(j) += T.b_up(i) * T.t(i, j);
    }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      T.t_trace += a_inv(i, j) * T.t(i, j);
      T.rr_trace += T.r_up(i, j) * T.r_up(j, i);
    }
  }
  return T;
}

}  // namespace detail

/// Christoffel symbols, Riemann and Ricci tensors of alpha at x.
inline RiemannData riemann_data(const AlphaSpec& alpha, std::span<const double> x) {
  detail::check_point(alpha, x);
  auto ctx = JetContext::make(alpha.dim(), 3);
  const auto xs = detail::coordinate_jets(ctx, x);
  return detail::riemann_values(detail::connection(alpha, xs));
}

inline AbTensors ab_tensors(const AlphaSpec& alpha, const BetaSpec& beta, std::span<const double> x) {
  detail::check_point(alpha, x);
  if (beta.dim() != alpha.dim()) throw IndexError("beta dimension does not match alpha");
  auto ctx = JetContext::make(alpha.dim(), 3);
  const auto xs = detail::coordinate_jets(ctx, x);
  const auto c = detail::connection(alpha, xs);
  return detail::ab_tensors_from_jets(c, beta.eval(xs));
}

/// Both bundles from one connection evaluation.
inline std::pair<RiemannData, AbTensors> alpha_beta_data(const AlphaSpec& alpha, const BetaSpec& beta,
                                                         std::span<const double> x) {
  detail::check_point(alpha, x);
  if (beta.dim() != alpha.dim()) throw IndexError("beta dimension does not match alpha");
  auto ctx = JetContext::make(alpha.dim(), 3);
  const auto xs = detail::coordinate_jets(ctx, x);
  const auto c = detail::connection(alpha, xs);
  return {detail::riemann_values(c), detail::ab_tensors_from_jets(c, beta.eval(xs))};
}

/// G^i_alpha = 1/2 Gamma^i_jk y^j y^k.
inline std::vector<double> riemannian_spray(const RiemannData& rd, std::span<const double> y) {
  std::vector<double> G(static_cast<std::size_t>(rd.n), 0.0);
  for (int i = 0; i < rd.n; ++i)
    for (int j = 0; j < rd.n; ++j)
      for (int k = 0; k < rd.n; ++k)
        G[static_cast<std::size_t>(i)] += 0.5 * rd.christoffel(i, j, k) * y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(k)];
  return G;
}

/// phi(s) = (1 + s)^p and its first two derivatives.
struct PowerProfile {
  double p;
  double phi(double s) const { return std::pow(1.0 + s, p); }
  double dphi(double s) const { return p * std::pow(1.0 + s, p - 1.0); }
  double ddphi(double s) const { return p * (p - 1.0) * std::pow(1.0 + s, p - 2.0); }
};

/// Q, Theta, Psi, Delta of the (alpha, beta) spray decomposition at s.
struct SprayFactors {
  double Q, dQ, Theta, Psi, Delta;
};

inline SprayFactors spray_factors(const PowerProfile& phi, double s, double b2) {
  if (!(1.0 + s > 0.0)) throw DomainError("1 + beta/alpha must be positive");
  const double f = phi.phi(s), df = phi.dphi(s), ddf = phi.ddphi(s);
  const double denom = f - s * df;
  if (!(std::abs(denom) >= kDefaultDivisionFloor)) throw DegenerateValue("phi - s phi' vanishes");
  SprayFactors k{};
  k.Q = df / denom;
  k.dQ = f * ddf / (denom * denom);
  k.Delta = 1.0 + s * k.Q + (b2 - s * s) * k.dQ;
  if (!(std::abs(k.Delta) >= kDefaultDivisionFloor)) throw DegenerateValue("Delta vanishes");
  k.Theta = (k.Q - s * k.dQ) / (2.0 * k.Delta);
  k.Psi = k.dQ / (2.0 * k.Delta);
  return k;
}

/// Spray of F = alpha (1 + beta/alpha)^p assembled from alpha's spray and the
/// r, s tensors of beta.
inline std::vector<double> structural_spray(const AlphaSpec& alpha, const BetaSpec& beta, double p,
                                            const TangentSample& sample) {
  const auto [rd, T] = alpha_beta_data(alpha, beta, sample.x);
  const auto& y = sample.y;
  const double a2 = T.form(rd.a, y);
  if (!(a2 > 0.0)) throw DomainError("alpha must be positive");
  const double al = std::sqrt(a2);
  const double s = T.beta(y) / al;
  const SprayFactors k = spray_factors(PowerProfile{p}, s, T.b2);
  const double w = -2.0 * al * k.Q * T.s0(y) + T.r00(y);
  auto G = riemannian_spray(rd, y);
  const auto su = T.s_up0(y);
  for (int i = 0; i < rd.n; ++i)
    G[static_cast<std::size_t>(i)] += al * k.Q * su[static_cast<std::size_t>(i)] + k.Theta * w * y[static_cast<std::size_t>(i)] / al +
                                      k.Psi * w * T.b_up(i);
  return G;
}

/// Ricci curvature of the Randers metric alpha + beta by the classical
/// closed form in terms of alpha's Ricci curvature and beta's tensors.
inline double randers_ricci(const AlphaSpec& alpha, const BetaSpec& beta, const TangentSample& sample) {
  const auto [rd, T] = alpha_beta_data(alpha, beta, sample.x);
  const auto& y = sample.y;
  const int n = rd.n;
  const double al = std::sqrt(T.form(rd.a, y));
  const double F = al + T.beta(y);
  if (!(F > 0.0)) throw DomainError("alpha + beta must be positive");
  const auto sdiv = T.s_div_covector(rd.a_inv);
  double s_div0 = 0.0;
  for (int j = 0; j < n; ++j) s_div0 += sdiv[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
  const double r00 = T.r00(y), s0 = T.s0(y);
  double ric = rd.ricci_form(y) + 2.0 * al * s_div0 - 2.0 * T.t00(y) - al * al * T.t_trace;
  ric += (n - 1) * (3.0 * (r00 - 2.0 * al * s0) * (r00 - 2.0 * al * s0) / (4.0 * F * F) +
                    (4.0 * al * (T.q00(y) - al * T.t0(y)) - T.r00_0(y) + 2.0 * al * T.s0_0(y)) / (2.0 * F));
  return ric;
}

/// Signs applied to the curvature terms of the four Ricci identities.
/// `riemann_sign` multiplies b^l R_klij in the first identity; `ricci_sign`
/// multiplies the Ric terms of the second and fourth.
struct CurvatureConvention {
  double riemann_sign = 1.0;
  double ricci_sign = 1.0;

  CurvatureConvention flipped() const { return {-riemann_sign, -ricci_sign}; }
  std::string describe() const {
    auto sgn = [](double v) { return v > 0 ? std::string("+") : std::string("-"); };
    return "R_ijkl=K(a_ik a_jl - a_il a_jk); Ric_jl=a^ik R_ijkl; identity signs: riemann " +
           sgn(riemann_sign) + ", ricci " + sgn(ricci_sign);
  }
};

/// Normalized residuals of the four Ricci identities linking covariant
/// derivatives of r and s with the curvature of alpha:
///   s_ij|k = r_ik|j - r_jk|i - b^l R_klij
///   s^k_0|k = r^k_k|0 - r^k_0|k + b^l Ric_l0
///   b^k s_0|k = r_k s^k_0 - t_0 + b^k b^l r_kl|0 - b^k b^l r_k0|l
///   s^k_|k = r^k_|k - t^k_k - r^i_j r^j_i - b^i r^k_k|i - b^k b^i Ric_ik
/// Each residual is max |lhs - rhs| over components divided by
/// max(1, largest term magnitude).
inline std::array<double, 4> ricci_identity_residuals(const RiemannData& rd, const AbTensors& T,
                                                      const CurvatureConvention& conv) {
  const int n = rd.n;
  std::array<double, 4> res{};

  {
    double worst = 0.0, scale = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double curv = 0.0;
          for (int l = 0; l < n; ++l) curv += T.b_up(l) * rd.riemann(k, l, i, j);
          const double lhs = T.s_cov(i, j, k);
          const double rhs = T.r_cov(i, k, j) - T.r_cov(j, k, i) - conv.riemann_sign * curv;
          worst = std::max(worst, std::abs(lhs - rhs));
          scale = std::max({scale, std::abs(lhs), std::abs(T.r_cov(i, k, j)), std::abs(T.r_cov(j, k, i)), std::abs(curv)});
        }
    res[0] = worst / scale;
  }
  {
    const auto sdiv = T.s_div_covector(rd.a_inv);
    double worst = 0.0, scale = 1.0;
    for (int j = 0; j < n; ++j) {
      double r_div_j = 0.0;  // r^k_{j|k}
      for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m) r_div_j += rd.a_inv(k, m) * T.r_cov(m, j, k);
      double ric = 0.0;
      for (int l = 0; l < n; ++l) ric += T.b_up(l) * rd.ricci(l, j);
      const double lhs = sdiv[static_cast<std::size_t>(j)];
      const double rhs = T.grad_r_trace(j) - r_div_j + conv.ricci_sign * ric;
      worst = std::max(worst, std::abs(lhs - rhs));
      scale = std::max({scale, std::abs(lhs), std::abs(T.grad_r_trace(j)), std::abs(r_div_j), std::abs(ric)});
    }
    res[1] = worst / scale;
  }
  {
    double worst = 0.0, scale = 1.0;
    for (int j = 0; j < n; ++j) {
      double lhs = 0.0, rs = 0.0, bbr0 = 0.0, bbrl = 0.0;
      for (int k = 0; k < n; ++k) {
        lhs += T.b_up(k) * T.s1_cov(j, k);
        rs += T.r1(k) * T.s_up(k, j);
        for (int l = 0; l < n; ++l) {
          bbr0 += T.b_up(k) * T.b_up(l) * T.r_cov(k, l, j);
          bbrl += T.b_up(k) * T.b_up(l) * T.r_cov(k, j, l);
        }
      }
      const double rhs = rs - T.t1(j) + bbr0 - bbrl;
      worst = std::max(worst, std::abs(lhs - rhs));
      scale = std::max({scale, std::abs(lhs), std::abs(rs), std::abs(T.t1(j)), std::abs(bbr0), std::abs(bbrl)});
    }
    res[2] = worst / scale;
  }
  {
    double b_grad = 0.0, bbric = 0.0;
    for (int i = 0; i < n; ++i) {
      b_grad += T.b_up(i) * T.grad_r_trace(i);
      for (int k = 0; k < n; ++k) bbric += T.b_up(k) * T.b_up(i) * rd.ricci(i, k);
    }
    const double rhs = T.r_div - T.t_trace - T.rr_trace - b_grad - conv.ricci_sign * bbric;
    const double scale = std::max({1.0, std::abs(T.s_div), std::abs(T.r_div), std::abs(T.t_trace), std::abs(T.rr_trace),
                                   std::abs(b_grad), std::abs(bbric)});
    res[3] = std::abs(T.s_div - rhs) / scale;
  }
  return res;
}

inline std::array<double, 4> ricci_identity_residuals(const AlphaSpec& alpha, const BetaSpec& beta,
                                                      std::span<const double> x, const CurvatureConvention& conv) {
  const auto [rd, T] = alpha_beta_data(alpha, beta, x);
  return ricci_identity_residuals(rd, T, conv);
}

}  // namespace finsler

namespace finsler {

/// Picks, identity by identity, the sign of the curvature term that makes
/// the Ricci identities hold on a fixed generic instance (non-flat alpha,
/// non-closed beta in three dimensions). The Riemann tensor itself is fixed
/// by R_ijkl = K (a_ik a_jl - a_il a_jk); only the identity signs are chosen.
inline CurvatureConvention calibrated_convention() {
  static const CurvatureConvention conv = [] {
    const AlphaSpec alpha = AlphaSpec::parse({{"1 + 0.3*x1^2", "0.1*x1*x2", "0.05*x3"},
                                              {"0.1*x1*x2", "2 + sin(x2)", "0"},
                                              {"0.05*x3", "0", "1.5 + 0.2*x1*x3"}});
    const BetaSpec beta = BetaSpec::parse({"0.3*x2 + 0.1*x3^2", "0.2*sin(x1)", "0.1*x1*x2"});
    const std::vector<double> x{0.3, -0.4, 0.5};
    const auto plus = ricci_identity_residuals(alpha, beta, x, {1.0, 1.0});
    const auto minus = ricci_identity_residuals(alpha, beta, x, {-1.0, -1.0});
    return CurvatureConvention{plus[0] <= minus[0] ? 1.0 : -1.0,
                               plus[1] + plus[3] <= minus[1] + minus[3] ? 1.0 : -1.0};
  }();
  return conv;
}

inline std::array<double, 4> ricci_identity_residuals(const AlphaSpec& alpha, const BetaSpec& beta,
                                                      std::span<const double> x) {
  return ricci_identity_residuals(alpha, beta, x, calibrated_convention());
}

}  // namespace finsler
