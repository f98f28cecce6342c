#pragma once

// Executes a manifest: evaluates every sample point (concurrently), runs the
// requested checks and assembles a deterministic JSON report.

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "finsler/alphabeta.hpp"
#include "finsler/constructions.hpp"
#include "finsler/curvature.hpp"
#include "finsler/manifest.hpp"

namespace finsler {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string manifest_hash(const nlohmann::json& doc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016" PRIx64, fnv1a64(doc.dump()));
  return buf;
}

/// Worker count: FINSLERLAB_THREADS when set to a positive integer, else the
/// hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("FINSLERLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn fn) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

namespace runner_detail {

using nlohmann::json;
using Residuals = std::map<std::string, double>;

struct DirectionResult {
  std::vector<double> y;
  double F, ricci, lambda;
  std::vector<double> spray;
};

struct PointResult {
  std::vector<double> x;
  std::string skipped;  ///< empty when evaluated
  std::vector<DirectionResult> directions;
  int skipped_directions = 0;
  double lambda_mean = 0.0, lambda_spread = 0.0;
  std::optional<double> K;  ///< engine flag curvature (mean over directions)
  std::map<std::string, Residuals> checks;
  std::map<std::string, std::string> check_skipped;
};

inline double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline std::vector<double> transverse(const std::vector<double>& y) {
  std::vector<double> u(y.size(), 0.0);
  std::size_t k = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (std::abs(y[i]) < std::abs(y[k])) k = i;
  u[k] = 1.0;
  if (y.size() == 2) u = {-y[1], y[0]};
  return u;
}

class PointEvaluator {
public:
  PointEvaluator(const Manifest& m, const FinslerMetric& F) : m_(m), F_(F), dirs_(unit_directions(m.dimension, m.directions)) {}

  PointResult evaluate(const std::vector<double>& x) const {
    PointResult r;
    r.x = x;
    try {
      if (m_.family) sqrt2d_check_point(*m_.family, x, m_.margin);
      engine(r);
    } catch (const Error& e) {
      r.skipped = e.what();
      return r;
    }
    for (const auto& name : m_.checks) {
      try {
        r.checks[name] = run_check(name, r);
      } catch (const Error& e) {
        r.check_skipped[name] = e.what();
      }
    }
    return r;
  }

private:
  void engine(PointResult& r) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0, ksum = 0.0;
    for (const auto& y : dirs_) {
      if (!F_.admits(r.x, y)) {
        ++r.skipped_directions;
        continue;
      }
      const auto cp = curvature_point(F_, {r.x, y});
      r.directions.push_back({y, cp.F, cp.ricci, cp.einstein_scalar, cp.spray});
      lo = std::min(lo, cp.einstein_scalar);
      hi = std::max(hi, cp.einstein_scalar);
      sum += cp.einstein_scalar;
      if (m_.dimension >= 2) ksum += flag_curvature(cp, transverse(y));
    }
    if (r.directions.empty()) throw DomainError("no admissible direction at the point");
    const double count = static_cast<double>(r.directions.size());
    r.lambda_mean = sum / count;
    r.lambda_spread = hi - lo;
    if (m_.dimension >= 2) r.K = ksum / count;
  }

  Residuals run_check(const std::string& name, const PointResult& r) const {
    const auto& x = r.x;
    const int n = m_.dimension;
    if (name == "einstein") return {{"lambda_spread", r.lambda_spread}};
    if (name == "reversibility") {
      double worst = 0.0;
      int used = 0;
      for (const auto& d : r.directions) {
        std::vector<double> minus = d.y;
        for (double& v : minus) v = -v;
        if (!F_.admits(x, minus)) continue;
        worst = std::max(worst, std::abs(d.lambda - einstein_scalar(F_, {x, minus})));
        ++used;
      }
      if (used == 0) throw DomainError("no direction with -y admissible");
      return {{"lambda_asymmetry", worst}};
    }
    if (name == "flag_curvature") {
      Residuals out;
      double inv = 0.0;
      for (const auto& d : r.directions) {
        const auto cp = curvature_point(F_, {x, d.y});
        auto u = transverse(d.y);
        auto w = u;
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 2.0 * u[i] + 0.7 * d.y[i];
        inv = std::max(inv, rel(flag_curvature(cp, u), flag_curvature(cp, w)));
      }
      out["plane_invariance"] = inv;
      if (m_.family) {
        // On v = 0 the u, v, B formula is undefined; K stays the engine value.
        try {
          out["uvB_formula"] = rel(*r.K, sqrt2d_flag_curvature(*m_.family, x));
        } catch (const DegenerateValue&) {
        }
      }
      return out;
    }
    if (name == "pde_residuals") {
      const auto p = sqrt2d_pde_residuals(*m_.family, x);
      return {{"u1_minus_v2", p.cauchy_riemann_1}, {"u2_plus_v1", p.cauchy_riemann_2}, {"u_B1_plus_v_B2", p.level}};
    }
    if (name == "ricci_identities") {
      const auto v = ricci_identity_residuals(m_.alpha, m_.beta, x);
      return {{"identity1", v[0]}, {"identity2", v[1]}, {"identity3", v[2]}, {"identity4", v[3]}};
    }
    if (name == "structural_vs_generic") {
      // Normalised by the largest spray at the point: the spray can vanish
      // along single directions, where a per-direction ratio is pure noise.
      double diff = 0.0, scale = 0.0;
      for (const auto& d : r.directions) {
        const auto Gs = structural_spray(m_.alpha, m_.beta, m_.p, {x, d.y});
        for (std::size_t i = 0; i < Gs.size(); ++i) {
          diff = std::max(diff, std::abs(Gs[i] - d.spray[i]));
          scale = std::max(scale, std::abs(d.spray[i]));
        }
      }
      return {{"spray_relative", scale > 0.0 ? diff / scale : diff}};
    }
    if (name == "randers_conditions" || name == "square_conditions") {
      const auto rep = name == "randers_conditions" ? randers_einstein_residuals(m_.alpha, m_.beta, {x}, m_.directions)
                                                    : square_einstein_residuals(m_.alpha, m_.beta, {x}, m_.directions);
      if (!rep.skipped.empty()) throw DomainError(rep.skipped.front());
      Residuals out = rep.residuals;
      for (const auto& [k, v] : rep.point_scalars.front()) out["scalar_" + k] = v;
      return out;
    }
    if (name == "sqrt2d_conditions") {
      Residuals out{{"r00_condition", sqrt2d_einstein_residual(m_.alpha, m_.beta, x, m_.directions)}};
      if (out["r00_condition"] < m_.tolerance(name)) {
        const double K = sqrt2d_K_from_lambda(m_.alpha, m_.beta, x, m_.tolerance(name));
        out["K_vs_engine"] = rel(K, r.lambda_mean);
      }
      return out;
    }
    if (name == "positivity") {
      const auto a = m_.alpha.eval(x);
      const auto b = m_.beta.eval(x);
      const double b2 = quadratic_form(inverse(a), b, b);
      const bool closed = positivity_check(m_.p, b2);
      const bool sampled = positivity_sample(m_.p, b2, 2001).positive;
      return {{"not_positive", closed ? 0.0 : 1.0}, {"criteria_disagree", closed == sampled ? 0.0 : 1.0}};
    }
    if (name == "killing_deformation") {
      const auto k = killing_deformation(m_.alpha, m_.beta, x);
      double expected = k.expected_norm2();
      if (m_.family) {
        const double B = m_.family->B.eval(x);
        expected = B / std::pow(1.0 - B, 1.5);
      }
      return {{"r_tilde", k.r_tilde_max}, {"norm_identity", std::abs(k.beta_tilde_norm2 - expected)}};
    }
    if (name == "ricci_flat_parallel") {
      const auto c = ricci_flat_parallel_check(m_.alpha, m_.beta, {x}, m_.directions, m_.tolerance(name));
      return {{"b_covariant", c.max_b_cov}, {"alpha_ricci", c.max_ricci}};
    }
    (void)n;
    throw Error("unknown check " + name);
  }

  const Manifest& m_;
  const FinslerMetric& F_;
  std::vector<std::vector<double>> dirs_;
};

inline FinslerMetric build_metric(const Manifest& m) {
  if (m.kind == MetricKind::riemann) return riemannian_metric(m.alpha);
  return ppower_metric(m.ppower());
}

}  // namespace runner_detail

struct RunOutput {
  nlohmann::json report;
  std::string csv;
  bool verdict = false;
};

inline RunOutput run_manifest(const Manifest& m, unsigned workers = worker_count()) {
  using namespace runner_detail;
  const FinslerMetric F = build_metric(m);
  const PointEvaluator eval(m, F);
  std::vector<PointResult> results(m.points.size());
  parallel_for(m.points.size(), workers, [&](std::size_t i) { results[i] = eval.evaluate(m.points[i]); });

  json points = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    json p{{"index", i}, {"x", r.x}};
    if (m.family) p["B"] = m.family->B.eval(r.x);
    if (!r.skipped.empty()) {
      p["status"] = "skipped";
      p["reason"] = r.skipped;
      points.push_back(std::move(p));
      continue;
    }
    p["status"] = "ok";
    p["lambda_mean"] = r.lambda_mean;
    p["lambda_spread"] = r.lambda_spread;
    if (r.K) p["K"] = *r.K;
    if (m.family) {
      try {
        p["K_uvB"] = sqrt2d_flag_curvature(*m.family, r.x);
      } catch (const Error& e) {
        p["K_uvB"] = nullptr;
        p["K_uvB_reason"] = e.what();
      }
    }
    p["skipped_directions"] = r.skipped_directions;
    json dirs = json::array();
    for (const auto& d : r.directions)
      dirs.push_back({{"y", d.y}, {"F", d.F}, {"ricci", d.ricci}, {"lambda", d.lambda}, {"spray", d.spray}});
    p["directions"] = std::move(dirs);
    json checks = json::object();
    for (const auto& [name, res] : r.checks) checks[name] = res;
    for (const auto& [name, why] : r.check_skipped) checks[name] = {{"skipped", why}};
    p["checks"] = std::move(checks);
    points.push_back(std::move(p));
  }

  json checks = json::object();
  bool all = true;
  for (const auto& name : m.checks) {
    Residuals worst;
    json skipped = json::array();
    int evaluated = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      if (!r.skipped.empty()) {
        skipped.push_back({{"point", i}, {"reason", r.skipped}});
        continue;
      }
      if (auto it = r.check_skipped.find(name); it != r.check_skipped.end()) {
        skipped.push_back({{"point", i}, {"reason", it->second}});
        continue;
      }
      ++evaluated;
      for (const auto& [k, v] : r.checks.at(name)) {
        if (k.rfind("scalar_", 0) == 0) continue;
        worst[k] = std::max(worst.count(k) ? worst[k] : 0.0, v);
      }
    }
    const double tol = m.tolerance(name);
    bool verdict = evaluated > 0;
    for (const auto& [k, v] : worst) verdict = verdict && v < tol;
    all = all && verdict;
    checks[name] = {{"tolerance", tol}, {"max_residuals", worst}, {"evaluated", evaluated}, {"skipped", skipped}, {"verdict", verdict}};
  }

  RunOutput out;
  out.verdict = all;
  out.report = {
      {"engine",
       {{"name", "finslerlab"},
        {"version", kVersion},
        {"jet_order", 4},
        {"curvature_convention", calibrated_convention().describe()}}},
      {"manifest", m.source},
      {"manifest_hash", manifest_hash(m.source)},
      {"seed", m.seed ? json(*m.seed) : json(nullptr)},
      {"points", std::move(points)},
      {"checks", std::move(checks)},
      {"verdict", all},
  };

  // CSV: one row per point with x, B, lambda, K and every residual column.
  std::set<std::string> columns;
  for (const auto& r : results)
    for (const auto& [name, res] : r.checks)
      for (const auto& [k, v] : res) columns.insert(name + "." + k);
  std::ostringstream csv;
  csv.precision(17);
  for (int i = 0; i < m.dimension; ++i) csv << "x" << i + 1 << ",";
  csv << "B,lambda,K,status";
  for (const auto& c : columns) csv << "," << c;
  csv << "\n";
  for (const auto& r : results) {
    for (double v : r.x) csv << v << ",";
    if (m.family) csv << m.family->B.eval(r.x);
    csv << ",";
    if (r.skipped.empty()) {
      csv << r.lambda_mean << ",";
      if (r.K) csv << *r.K;
      csv << ",ok";
    } else {
      csv << ",,skipped";
    }
    for (const auto& c : columns) {
      csv << ",";
      const auto dot = c.find('.');
      const auto it = r.checks.find(c.substr(0, dot));
      if (it == r.checks.end()) continue;
      if (auto jt = it->second.find(c.substr(dot + 1)); jt != it->second.end()) csv << jt->second;
    }
    csv << "\n";
  }
  out.csv = csv.str();
  return out;
}

}  // namespace finsler
