#pragma once

// Bundled verification suite: each criterion rebuilds its scenario from
// scratch, measures the relevant residuals and compares them with named
// tolerances. Used by `finslerlab verify-paper` and by the acceptance binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/alphabeta.hpp"
#include "finsler/constructions.hpp"
#include "finsler/curvature.hpp"

namespace finsler {

struct VerifyOptions {
  std::map<std::string, double> tolerance_overrides;  ///< name -> value; "*" applies to every tolerance
  bool flip_curvature_sign = false;
  std::uint64_t seed = 20240611;
};

struct CriterionResult {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  int number;
  std::string id;
  std::string summary;
  std::function<CriterionResult(const VerifyOptions&)> run;
};

namespace verify_detail {

using Clock = std::chrono::steady_clock;
using Points = std::vector<std::vector<double>>;

inline double tol(const VerifyOptions& o, const std::string& name, double fallback) {
  if (auto it = o.tolerance_overrides.find(name); it != o.tolerance_overrides.end()) return it->second;
  if (auto it = o.tolerance_overrides.find("*"); it != o.tolerance_overrides.end()) return it->second;
  return fallback;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Collects "name=measured<tolerance" clauses and the overall verdict.
class Ledger {
public:
  void less(const std::string& name, double measured, double tolerance) {
    add(name + "=" + fmt(measured) + (measured < tolerance ? "<" : ">=") + fmt(tolerance), measured < tolerance);
  }
  void greater(const std::string& name, double measured, double threshold) {
    add(name + "=" + fmt(measured) + (measured > threshold ? ">" : "<=") + fmt(threshold), measured > threshold);
  }
  void flag(const std::string& text, bool ok) { add(text, ok); }
  CriterionResult result() const { return {pass_, detail_.str(), 0.0}; }

private:
  void add(const std::string& clause, bool ok) {
    if (!first_) detail_ << "; ";
    first_ = false;
    detail_ << clause;
    pass_ = pass_ && ok;
  }
  std::ostringstream detail_;
  bool first_ = true;
  bool pass_ = true;
};

inline Sqrt2dFamilySpec rotation_family() {
  return {parse_expression("-x2"), parse_expression("x1"), parse_expression("x1^2+x2^2")};
}

inline Sqrt2dFamilySpec wave_family() {
  return {Expr::number(1), Expr::number(1), parse_expression("0.5 + 0.3*sin(x1 - x2)")};
}

/// Admissible family points: margin away from B in {0, 1}, u = v = 0 and v = 0.
inline Points family_points(const Sqrt2dFamilySpec& spec, std::pair<double, double> box, int count, std::uint64_t seed,
                            double margin = 0.05) {
  PointSampler sampler({box, box}, seed);
  Points out;
  while (static_cast<int>(out.size()) < count) {
    auto x = sampler.next();
    try {
      sqrt2d_check_point(spec, x, margin);
      if (std::abs(spec.v.eval(x)) < margin) continue;
      out.push_back(std::move(x));
    } catch (const Error&) {
    }
  }
  return out;
}

inline AlphaSpec funk_alpha() {
  return AlphaSpec::parse({{"((1-x1^2-x2^2)+x1^2)/(1-x1^2-x2^2)^2", "x1*x2/(1-x1^2-x2^2)^2"},
                           {"x1*x2/(1-x1^2-x2^2)^2", "((1-x1^2-x2^2)+x2^2)/(1-x1^2-x2^2)^2"}});
}
inline BetaSpec funk_beta() { return BetaSpec::parse({"x1/(1-x1^2-x2^2)", "x2/(1-x1^2-x2^2)"}); }

/// Random polynomial (alpha, beta) in n dimensions: a_ij near delta_ij with
/// linear and quadratic perturbations, b_i a random quadratic.
inline std::pair<AlphaSpec, BetaSpec> random_polynomial_instance(std::mt19937_64& rng, int n, double size = 0.2) {
  std::uniform_real_distribution<double> c(-size, size);
  auto poly = [&](double constant) {
    std::ostringstream e;
    e.precision(17);
    e << constant;
    for (int k = 1; k <= n; ++k) e << " + " << c(rng) << "*x" << k;
    for (int k = 1; k <= n; ++k)
      for (int l = k; l <= n; ++l) e << " + " << c(rng) << "*x" << k << "*x" << l;
    return e.str();
  };
  std::vector<std::vector<std::string>> a(static_cast<std::size_t>(n), std::vector<std::string>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j < a.size(); ++j) a[i][j] = a[j][i] = poly(i == j ? 1.0 : 0.0);
  std::vector<std::string> b;
  for (int i = 0; i < n; ++i) b.push_back(poly(c(rng)));
  return {AlphaSpec::parse(a), BetaSpec::parse(b)};
}

inline std::vector<double> random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(u(rng));
  return v;
}

inline std::vector<double> perpendicular(const std::vector<double>& y) { return {-y[1], y[0]}; }

// --- criteria --------------------------------------------------------------

inline CriterionResult rotation_family_closed_form(const VerifyOptions& o) {
  const auto spec = rotation_family();
  const auto fam = sqrt2d_family(spec);
  const FinslerMetric F = ppower_metric(fam.metric_spec());
  const auto points = family_points(spec, {-0.97, 0.97}, 10, o.seed);
  const auto start = Clock::now();
  const auto check = einstein_check(F, points, 32, tol(o, "spread", 1e-7));
  double worst = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double B = spec.B.eval(points[k]);
    const double closed = -1.0 / std::sqrt(1.0 - B);
    for (const auto& y : unit_directions(2, 32))
      if (F.admits(points[k], y)) worst = std::max(worst, std::abs(einstein_scalar(F, {points[k], y}) - closed));
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  Ledger l;
  l.less("max_spread", check.max_spread, tol(o, "spread", 1e-7));
  l.less("max|lambda+1/sqrt(1-B)|", worst, tol(o, "lambda", 1e-7));
  l.less("seconds", seconds, 10.0);
  return l.result();
}

inline CriterionResult sqrt2d_curvature_agreement(const VerifyOptions& o) {
  const auto start = Clock::now();
  const double t = tol(o, "agreement", 1e-6);
  Ledger l;
  int total = 0;
  for (const auto& [name, spec, box] : {std::tuple{std::string("rotation"), rotation_family(), std::pair{-0.97, 0.97}},
                                        std::tuple{std::string("wave"), wave_family(), std::pair{-2.0, 2.0}}}) {
    const auto fam = sqrt2d_family(spec);
    const FinslerMetric F = ppower_metric(fam.metric_spec());
    std::mt19937_64 rng(o.seed + 1);
    double worst = 0.0, pde = 0.0;
    for (const auto& x : family_points(spec, box, 20, o.seed + 2)) {
      pde = std::max(pde, sqrt2d_pde_residuals(spec, x).max());
      const double K1 = sqrt2d_flag_curvature(spec, x);
      const double K2 = sqrt2d_K_from_lambda(fam.alpha, fam.beta, x, 1e-8);
      std::vector<double> y;
      do y = random_vector(rng, 2, -1.0, 1.0);
      while (!F.admits(x, y));
      const double K3 = flag_curvature(F, {x, y}, perpendicular(y));
      worst = std::max({worst, std::abs(K1 - K2), std::abs(K1 - K3), std::abs(K2 - K3)});
      ++total;
    }
    l.less(name + "_pde", pde, 1e-10);
    l.less(name + "_pairwise", worst, t);
  }
  l.flag("points=" + std::to_string(total), total == 40);
  l.less("seconds", std::chrono::duration<double>(Clock::now() - start).count(), 10.0);
  return l.result();
}

inline CriterionResult structural_spray_agreement(const VerifyOptions& o) {
  const auto start = Clock::now();
  std::mt19937_64 rng(o.seed + 3);
  Ledger l;
  for (double p : {1.0, 2.0, -1.0, 0.5, 3.0}) {
    const auto [alpha, beta] = random_polynomial_instance(rng, 3);
    const FinslerMetric F = ppower_metric({alpha, beta, p});
    double worst = 0.0;
    int used = 0;
    while (used < 100) {
      const TangentSample s{random_vector(rng, 3, -0.5, 0.5), random_vector(rng, 3, -1.0, 1.0)};
      if (!F.admits(s.x, s.y)) continue;
      if (!positivity_sample({alpha, beta, p}, s.x).positive) continue;
      const auto Gs = structural_spray(alpha, beta, p, s);
      const auto Gg = spray(F, s);
      double diff = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < Gg.size(); ++i) {
        diff = std::max(diff, std::abs(Gs[i] - Gg[i]));
        scale = std::max(scale, std::abs(Gg[i]));
      }
      worst = std::max(worst, diff / std::max(scale, 1e-300));
      ++used;
    }
    l.less("p=" + fmt(p), worst, tol(o, "spray", 1e-9));
  }
  l.less("seconds", std::chrono::duration<double>(Clock::now() - start).count(), 30.0);
  return l.result();
}

inline CriterionResult randers_ricci_agreement(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed + 4);
  std::uniform_real_distribution<double> c(-0.3, 0.3);
  const double t = tol(o, "ricci", 1e-7);
  const AlphaSpec flat = AlphaSpec::euclidean(2);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::ostringstream b1, b2;
    b1.precision(17);
    b2.precision(17);
    b1 << c(rng) << " + " << c(rng) << "*x2 + " << c(rng) << "*x1*x2";
    b2 << c(rng) << " + " << c(rng) << "*x1 + " << c(rng) << "*x1^2";
    const BetaSpec beta = BetaSpec::parse({b1.str(), b2.str()});
    const FinslerMetric F = ppower_metric({flat, beta, 1.0});
    TangentSample s{random_vector(rng, 2, -0.5, 0.5), random_vector(rng, 2, -1.0, 1.0)};
    while (!F.admits(s.x, s.y)) s.y = random_vector(rng, 2, -1.0, 1.0);
    const double engine = ricci(F, s);
    worst = std::max(worst, std::abs(randers_ricci(flat, beta, s) - engine) / std::max(1.0, std::abs(engine)));
  }
  const FinslerMetric funk = ppower_metric({funk_alpha(), funk_beta(), 1.0});
  double funk_worst = 0.0, funk_lambda = 0.0;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> x;
    do x = random_vector(rng, 2, -0.8, 0.8);
    while (x[0] * x[0] + x[1] * x[1] > 0.64);
    TangentSample s{x, random_vector(rng, 2, -1.0, 1.0)};
    const auto cp = curvature_point(funk, s);
    funk_worst = std::max(funk_worst, std::abs(randers_ricci(funk_alpha(), funk_beta(), s) - cp.ricci) / std::max(1.0, std::abs(cp.ricci)));
    funk_lambda = std::max(funk_lambda, std::abs(cp.einstein_scalar + 0.25));
  }
  Ledger l;
  l.less("flat_alpha_relative", worst, t);
  l.less("funk_relative", funk_worst, t);
  l.less("funk|lambda+1/4|", funk_lambda, tol(o, "funk_lambda", 1e-6));
  return l.result();
}

inline CriterionResult ricci_identities(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed + 5);
  const CurvatureConvention conv = o.flip_curvature_sign ? calibrated_convention().flipped() : calibrated_convention();
  const double t = tol(o, "identity", 1e-7);
  std::array<double, 4> worst{};
  double flipped_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const auto [alpha, beta] = random_polynomial_instance(rng, 3);
    const auto x = random_vector(rng, 3, -0.5, 0.5);
    const auto [rd, T] = alpha_beta_data(alpha, beta, x);
    const auto r = ricci_identity_residuals(rd, T, conv);
    for (std::size_t i = 0; i < 4; ++i) worst[i] = std::max(worst[i], r[i]);
    const auto f = ricci_identity_residuals(rd, T, conv.flipped());
    flipped_min = std::min(flipped_min, std::max({f[0], f[1], f[3]}));
  }
  Ledger l;
  for (std::size_t i = 0; i < 4; ++i) l.less("identity" + std::to_string(i + 1), worst[i], t);
  l.greater("flipped_min", flipped_min, t);
  l.flag("convention=" + conv.describe(), true);
  return l.result();
}

inline CriterionResult positivity_criterion(const VerifyOptions&) {
  std::vector<std::pair<double, double>> pairs{{3.0, 0.2}, {3.0, 0.3}, {2.0, 0.99}, {0.4, 0.8}, {0.4, 0.95}};
  for (double p : {-2.0, -1.0, -0.5, 0.1, 0.25, 0.4, 0.5, 1.0, 2.0, 3.0, 5.0})
    for (double f : {0.5, 0.95, 0.999, 1.001, 1.05}) pairs.emplace_back(p, f * positivity_bound(p));
  int disagree = 0;
  std::string first;
  for (const auto& [p, b2] : pairs) {
    if (positivity_check(p, b2) != positivity_sample(p, b2, 2001).positive) {
      if (disagree++ == 0) first = " first=(p=" + fmt(p) + ",b2=" + fmt(b2) + ")";
    }
  }
  Ledger l;
  l.flag("pairs=" + std::to_string(pairs.size()), pairs.size() == 60);
  l.flag("disagreements=" + std::to_string(disagree) + first, disagree == 0);
  return l.result();
}

inline CriterionResult ricci_flat_parallel(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed + 7);
  const double t = tol(o, "ricci_flat", 1e-9);
  struct Case {
    std::string name;
    AlphaSpec alpha;
    BetaSpec beta;
    std::pair<double, double> box;
  };
  const std::vector<Case> cases{
      {"polar", AlphaSpec::parse({{"1", "0"}, {"0", "x1^2"}}), BetaSpec::parse({"0.4*cos(x2)", "-0.4*x1*sin(x2)"}), {0.5, 2.0}},
      {"cartesian", AlphaSpec::euclidean(3), BetaSpec::parse({"0.3", "-0.2", "0.1"}), {-1.0, 1.0}}};
  Ledger l;
  for (const auto& c : cases) {
    const int n = c.alpha.dim();
    Points pts;
    for (int k = 0; k < 10; ++k) pts.push_back(random_vector(rng, n, c.box.first, c.box.second));
    l.flag(c.name + "_parallel=" + (ricci_flat_parallel_check(c.alpha, c.beta, pts).verdict ? "true" : "false"),
           ricci_flat_parallel_check(c.alpha, c.beta, pts).verdict);
    for (double p : {-1.0, 3.0, 2.0, 1.0, 0.5}) {
      const FinslerMetric F = ppower_metric({c.alpha, c.beta, p});
      double ric = 0.0, rev = 0.0;
      for (int k = 0; k < 50; ++k) {
        TangentSample s{random_vector(rng, n, c.box.first, c.box.second), random_vector(rng, n, -1.0, 1.0)};
        ric = std::max(ric, std::abs(ricci(F, s)));
        rev = std::max(rev, reversibility_residual(F, s));
      }
      l.less(c.name + "_p=" + fmt(p) + "_ric", ric, t);
      l.less(c.name + "_p=" + fmt(p) + "_rev", rev, t);
    }
  }
  return l.result();
}

inline CriterionResult negative_control(const VerifyOptions& o) {
  const AlphaSpec flat = AlphaSpec::euclidean(2);
  const BetaSpec beta = BetaSpec::parse({"0.3*x2", "0"});
  const FinslerMetric F = ppower_metric({flat, beta, 1.0});
  const Points pts{{0.1, 0.5}, {-0.3, 0.2}, {0.4, -0.6}};
  double rev = 0.0;
  for (const auto& x : pts)
    for (const auto& y : unit_directions(2, 16)) rev = std::max(rev, reversibility_residual(F, {x, y}));
  const double t = tol(o, "control", 1e-3);
  const auto randers = randers_einstein_residuals(flat, beta, pts);
  const auto square = square_einstein_residuals(flat, beta, pts);
  Ledger l;
  l.greater("reversibility", rev, t);
  l.greater("isotropic_s", randers.residuals.at("isotropic_s"), t);
  l.greater("closure", square.residuals.at("closure"), t);
  l.flag(std::string("verdicts=") + (randers.verdict || square.verdict ? "accepted" : "rejected"),
         !randers.verdict && !square.verdict);
  return l.result();
}

inline CriterionResult killing(const VerifyOptions& o) {
  const auto spec = rotation_family();
  const auto fam = sqrt2d_family(spec);
  double r = 0.0, norm = 0.0;
  for (const auto& x : family_points(spec, {-0.97, 0.97}, 10, o.seed + 9)) {
    const auto k = killing_deformation(fam.alpha, fam.beta, x);
    const double B = spec.B.eval(x);
    r = std::max(r, k.r_tilde_max);
    norm = std::max(norm, std::abs(k.beta_tilde_norm2 - B / std::pow(1.0 - B, 1.5)));
  }
  Ledger l;
  l.less("max|r~|", r, tol(o, "killing", 1e-7));
  l.less("norm_identity", norm, tol(o, "norm", 1e-9));
  return l.result();
}

/// Order-k partials at the sample against central differences of the
/// order-(k-1) partials at shifted samples.
template <class JetsAt>
double fd_mismatch(JetsAt jets_at, const std::vector<double>& z, int max_order, double h) {
  const auto base = jets_at(z);
  const auto& ctx = base.front().context();
  double worst = 0.0;
  std::vector<std::vector<double>> plus_cache, minus_cache;
  std::vector<std::vector<Jet>> plus, minus;
  for (std::size_t v = 0; v < z.size(); ++v) {
    auto zp = z, zm = z;
    zp[v] += h;
    zm[v] -= h;
    plus.push_back(jets_at(zp));
    minus.push_back(jets_at(zm));
  }
  for (std::size_t idx = 1; idx < ctx->size(); ++idx) {
    const MultiIndex& alpha = ctx->multi_index(idx);
    const int k = ctx->degree(idx);
    if (k > max_order) continue;
    std::size_t v = 0;
    while (alpha[v] == 0) ++v;
    MultiIndex lower = alpha;
    lower[v] -= 1;
    for (std::size_t c = 0; c < base.size(); ++c) {
      const double exact = base[c].partial(alpha);
      const double fd = (plus[v][c].partial(lower) - minus[v][c].partial(lower)) / (2.0 * h);
      worst = std::max(worst, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
    }
  }
  return worst;
}

inline CriterionResult ad_soundness(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed + 10);
  const double t = tol(o, "ad", 1e-5);
  double worst_F = 0.0, worst_G = 0.0;
  int used = 0;
  const double ps[] = {1.0, 2.0, -1.0, 0.5, 3.0};
  while (used < 100) {
    const int n = 2 + used % 2;
    const double p = ps[used % 5];
    const auto [alpha, beta] = random_polynomial_instance(rng, n, 0.15);
    const FinslerMetric F = ppower_metric({alpha, beta, p});
    const TangentSample s{random_vector(rng, n, -0.5, 0.5), random_vector(rng, n, -1.0, 1.0)};
    if (!F.admits(s.x, s.y) || !positivity_sample({alpha, beta, p}, s.x).positive) continue;
    std::vector<double> z = s.x;
    z.insert(z.end(), s.y.begin(), s.y.end());
    auto split = [n](const std::vector<double>& zz) {
      return TangentSample{{zz.begin(), zz.begin() + n}, {zz.begin() + n, zz.end()}};
    };
    auto F2_at = [&](const std::vector<double>& zz) {
      return std::vector<Jet>{detail::spray_jets(F, split(zz), 4).F2};
    };
    auto G_at = [&](const std::vector<double>& zz) { return detail::spray_jets(F, split(zz), 4).G; };
    worst_F = std::max(worst_F, fd_mismatch(F2_at, z, 4, 2e-5));
    worst_G = std::max(worst_G, fd_mismatch(G_at, z, 2, 2e-5));
    ++used;
  }
  Ledger l;
  l.less("F2_partials", worst_F, t);
  l.less("spray_partials", worst_G, t);
  return l.result();
}

}  // namespace verify_detail

inline const std::vector<Criterion>& verification_suite() {
  using namespace verify_detail;
  static const std::vector<Criterion> suite{
      {1, "rotation-family-closed-form", "rotation family: lambda = -1/sqrt(1-B), direction independent", rotation_family_closed_form},
      {2, "sqrt2d-curvature-agreement", "u,v,B formula vs lambda formula vs engine flag curvature", sqrt2d_curvature_agreement},
      {3, "structural-spray", "(alpha,beta) spray decomposition vs generic spray", structural_spray_agreement},
      {4, "randers-ricci", "Randers Ricci closed form vs engine; Funk lambda = -1/4", randers_ricci_agreement},
      {5, "ricci-identities", "four Ricci identities under the calibrated convention; flipped run fails", ricci_identities},
      {6, "positivity-criterion", "closed-form positivity bound vs inequality sampling", positivity_criterion},
      {7, "ricci-flat-parallel", "flat alpha + parallel beta: Ric_F = 0, lambda reversible", ricci_flat_parallel},
      {8, "negative-control", "non-closed beta is rejected by every checker", negative_control},
      {9, "killing-deformation", "rescaled beta is Killing with the predicted norm", killing},
      {10, "ad-soundness", "jet partials of F^2 and G vs central differences", ad_soundness},
  };
  return suite;
}

inline CriterionResult run_criterion(const Criterion& c, const VerifyOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = c.run(o);
  } catch (const std::exception& e) {
    r = {false, std::string("error: ") + e.what(), 0.0};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace finsler
