#pragma once

// JSON scenario manifests: schema validation with JSON-pointer diagnostics.
//
//   {
//     "dimension": 2,
//     "metric": {"kind": "riemann" | "ppower" | "sqrt2d_family",
//                "alpha": [["1","0"],["0","1"]], "beta": ["0.3*x2","0"], "p": 1,
//                "u": "-x2", "v": "x1", "B": "x1^2+x2^2"},
//     "samples": {"points": [[0.6, 0]], "random": {"count": 10, "box": [[-1,1],[-1,1]]},
//                 "seed": 7, "directions": 16, "margin": 0.05},
//     "checks": ["einstein", "flag_curvature"],
//     "tolerances": {"einstein": 1e-7}
//   }

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "finsler/constructions.hpp"
#include "finsler/error.hpp"
#include "finsler/expr.hpp"
#include "finsler/metric.hpp"

namespace finsler {

enum class MetricKind { riemann, ppower, sqrt2d_family };

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "reversibility",    "einstein",          "flag_curvature",     "pde_residuals",
      "ricci_identities", "structural_vs_generic", "randers_conditions", "square_conditions",
      "sqrt2d_conditions", "positivity",       "killing_deformation", "ricci_flat_parallel"};
  return names;
}

inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"reversibility", 1e-9},       {"einstein", 1e-7},           {"flag_curvature", 1e-6},
      {"pde_residuals", 1e-10},      {"ricci_identities", 1e-7},   {"structural_vs_generic", 1e-9},
      {"randers_conditions", 1e-7},  {"square_conditions", 1e-7},  {"sqrt2d_conditions", 1e-8},
      {"positivity", 0.5},           {"killing_deformation", 1e-7}, {"ricci_flat_parallel", 1e-9}};
  return t;
}

struct Manifest {
  nlohmann::json source;  ///< the document as loaded
  int dimension = 0;
  MetricKind kind = MetricKind::riemann;
  AlphaSpec alpha;
  BetaSpec beta;
  double p = 1.0;
  std::optional<Sqrt2dFamilySpec> family;
  std::vector<std::vector<double>> points;  ///< explicit points followed by random ones
  std::optional<std::uint64_t> seed;
  int directions = 16;
  double margin = 0.05;
  std::vector<std::string> checks;
  std::map<std::string, double> tolerances;

  bool has_beta() const { return kind != MetricKind::riemann; }
  PPowerSpec ppower() const { return {alpha, beta, p}; }
  double tolerance(const std::string& check) const { return tolerances.at(check); }
};

namespace manifest_detail {

using nlohmann::json;

inline std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
inline std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

inline const json& require(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) throw SchemaError(child(ptr, key), "required member is missing");
  return obj.at(key);
}

inline double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw SchemaError(ptr, "expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& ptr, int lo, int hi) {
  if (!j.is_number_integer()) throw SchemaError(ptr, "expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > hi) throw SchemaError(ptr, "value must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

inline Expr expression(const json& j, const std::string& ptr, int dimension) {
  if (j.is_number()) return Expr::number(j.get<double>());
  if (!j.is_string()) throw SchemaError(ptr, "expected an expression string");
  Expr e;
  try {
    e = parse_expression(j.get<std::string>());
  } catch (const SyntaxError& err) {
    throw SchemaError(ptr, std::string("expression error at offset ") + std::to_string(err.offset()) + ": " + err.what());
  }
  if (e.max_coordinate() >= dimension)
    throw SchemaError(ptr, "expression uses x" + std::to_string(e.max_coordinate() + 1) + " beyond the dimension");
  return e;
}

inline std::vector<double> point(const json& j, const std::string& ptr, int dimension) {
  if (!j.is_array() || static_cast<int>(j.size()) != dimension)
    throw SchemaError(ptr, "expected an array of " + std::to_string(dimension) + " numbers");
  std::vector<double> x;
  for (std::size_t i = 0; i < j.size(); ++i) x.push_back(number(j[i], child(ptr, i)));
  return x;
}

inline void parse_metric(Manifest& m, const json& metric) {
  const std::string ptr = "/metric";
  if (!metric.is_object()) throw SchemaError(ptr, "expected an object");
  const json& kind = require(metric, ptr, "kind");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  const int n = m.dimension;
  auto parse_alpha = [&] {
    const json& a = require(metric, ptr, "alpha");
    const std::string ap = child(ptr, "alpha");
    if (!a.is_array() || static_cast<int>(a.size()) != n) throw SchemaError(ap, "expected an n x n array");
    AlphaSpec alpha(n);
    for (int i = 0; i < n; ++i) {
      const json& row = a[static_cast<std::size_t>(i)];
      const std::string rp = child(ap, static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<int>(row.size()) != n) throw SchemaError(rp, "expected a row of n expressions");
      for (int j = 0; j < n; ++j) {
        const Expr e = expression(row[static_cast<std::size_t>(j)], child(rp, static_cast<std::size_t>(j)), n);
        if (j < i && !(alpha(i, j) == e))
          throw SchemaError(child(rp, static_cast<std::size_t>(j)), "a_ij must be symmetric");
        if (j >= i) alpha.set(i, j, e);
      }
    }
    return alpha;
  };
  auto parse_beta = [&] {
    const json& b = require(metric, ptr, "beta");
    const std::string bp = child(ptr, "beta");
    if (!b.is_array() || static_cast<int>(b.size()) != n) throw SchemaError(bp, "expected n expressions");
    std::vector<Expr> comps;
    for (std::size_t i = 0; i < b.size(); ++i) comps.push_back(expression(b[i], child(bp, i), n));
    return BetaSpec(std::move(comps));
  };

  if (k == "riemann") {
    m.kind = MetricKind::riemann;
    m.alpha = parse_alpha();
    m.beta = BetaSpec::zero(n);
  } else if (k == "ppower") {
    m.kind = MetricKind::ppower;
    m.alpha = parse_alpha();
    m.beta = parse_beta();
    m.p = number(require(metric, ptr, "p"), child(ptr, "p"));
    if (m.p == 0.0) throw SchemaError(child(ptr, "p"), "p must be nonzero");
  } else if (k == "sqrt2d_family") {
    m.kind = MetricKind::sqrt2d_family;
    if (n != 2) throw SchemaError("/dimension", "sqrt2d_family requires dimension 2");
    Sqrt2dFamilySpec f{expression(require(metric, ptr, "u"), child(ptr, "u"), 2),
                       expression(require(metric, ptr, "v"), child(ptr, "v"), 2),
                       expression(require(metric, ptr, "B"), child(ptr, "B"), 2)};
    const auto fam = sqrt2d_family(f);
    m.family = f;
    m.alpha = fam.alpha;
    m.beta = fam.beta;
    m.p = 0.5;
  } else {
    throw SchemaError(child(ptr, "kind"), "expected one of riemann, ppower, sqrt2d_family");
  }
}

inline void parse_samples(Manifest& m, const json& s, std::optional<std::uint64_t> seed_override) {
  const std::string ptr = "/samples";
  if (!s.is_object()) throw SchemaError(ptr, "expected an object");
  if (s.contains("seed")) {
    if (!s["seed"].is_number_unsigned()) throw SchemaError(child(ptr, "seed"), "expected a nonnegative integer");
    m.seed = s["seed"].get<std::uint64_t>();
  }
  if (seed_override) m.seed = seed_override;
  if (s.contains("directions")) m.directions = integer(s["directions"], child(ptr, "directions"), 1, 4096);
  if (s.contains("margin")) {
    m.margin = number(s["margin"], child(ptr, "margin"));
    if (m.margin < 0.0 || m.margin >= 0.5) throw SchemaError(child(ptr, "margin"), "margin must lie in [0, 0.5)");
  }
  if (s.contains("points")) {
    const json& pts = s["points"];
    if (!pts.is_array()) throw SchemaError(child(ptr, "points"), "expected an array of points");
    for (std::size_t i = 0; i < pts.size(); ++i) m.points.push_back(point(pts[i], child(child(ptr, "points"), i), m.dimension));
  }
  if (s.contains("random")) {
    const std::string rp = child(ptr, "random");
    const json& r = s["random"];
    if (!r.is_object()) throw SchemaError(rp, "expected an object");
    if (!m.seed) throw SchemaError(child(ptr, "seed"), "random sampling requires a seed");
    const int count = integer(require(r, rp, "count"), child(rp, "count"), 1, 100000);
    const json& box = require(r, rp, "box");
    const std::string bp = child(rp, "box");
    if (!box.is_array() || static_cast<int>(box.size()) != m.dimension) throw SchemaError(bp, "expected one [lo, hi] per coordinate");
    std::vector<std::pair<double, double>> bounds;
    for (std::size_t i = 0; i < box.size(); ++i) {
      const auto lohi = point(box[i], child(bp, i), 2);
      if (!(lohi[0] < lohi[1])) throw SchemaError(child(bp, i), "expected lo < hi");
      bounds.emplace_back(lohi[0], lohi[1]);
    }
    PointSampler sampler(bounds, *m.seed);
    // Family charts reject points near their singular sets; other kinds take every draw.
    int accepted = 0, attempts = 0;
    while (accepted < count) {
      if (++attempts > 1000 * count) throw SchemaError(rp, "box yields too few admissible points");
      auto x = sampler.next();
      if (m.family) {
        try {
          sqrt2d_check_point(*m.family, x, m.margin);
        } catch (const Error&) {
          continue;
        }
      }
      m.points.push_back(std::move(x));
      ++accepted;
    }
  }
  if (m.points.empty()) throw SchemaError(ptr, "no sample points given");
}

}  // namespace manifest_detail

/// Validates a parsed document. `seed_override` replaces the manifest seed;
/// `tolerance_overrides` ("*" for all checks) replace manifest tolerances.
inline Manifest parse_manifest(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = std::nullopt,
                               const std::map<std::string, double>& tolerance_overrides = {}) {
  using namespace manifest_detail;
  if (!doc.is_object()) throw SchemaError("", "manifest must be a JSON object");
  Manifest m;
  m.source = doc;
  m.dimension = integer(require(doc, "", "dimension"), "/dimension", 1, kMaxDimension);
  parse_metric(m, require(doc, "", "metric"));
  parse_samples(m, require(doc, "", "samples"), seed_override);

  const json& checks = require(doc, "", "checks");
  if (!checks.is_array()) throw SchemaError("/checks", "expected an array of check names");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const std::string ptr = child(std::string("/checks"), i);
    if (!checks[i].is_string()) throw SchemaError(ptr, "expected a check name");
    const std::string name = checks[i].get<std::string>();
    if (!default_tolerances().count(name)) throw SchemaError(ptr, "unknown check '" + name + "'");
    if (!seen.insert(name).second) throw SchemaError(ptr, "duplicate check '" + name + "'");
    const bool family = m.kind == MetricKind::sqrt2d_family;
    if ((name == "pde_residuals") && !family) throw SchemaError(ptr, name + " requires kind sqrt2d_family");
    if ((name == "sqrt2d_conditions") && m.dimension != 2) throw SchemaError(ptr, name + " requires dimension 2");
    if ((name == "structural_vs_generic" || name == "positivity") && m.kind == MetricKind::riemann)
      throw SchemaError(ptr, name + " requires a (alpha, beta) metric");
    if ((name == "einstein" || name == "reversibility" || name == "randers_conditions" || name == "square_conditions") &&
        m.dimension < 2)
      throw SchemaError(ptr, name + " requires dimension >= 2");
    m.checks.push_back(name);
  }

  m.tolerances = default_tolerances();
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) throw SchemaError("/tolerances", "expected an object");
    for (const auto& [name, value] : t.items()) {
      const std::string ptr = "/tolerances/" + name;
      if (!m.tolerances.count(name)) throw SchemaError(ptr, "unknown check '" + name + "'");
      m.tolerances[name] = number(value, ptr);
    }
  }
  for (const auto& [name, value] : tolerance_overrides) {
    if (name == "*") {
      for (auto& [k, v] : m.tolerances) v = value;
    } else if (m.tolerances.count(name)) {
      m.tolerances[name] = value;
    } else {
      throw SchemaError("/tolerances/" + name, "unknown check '" + name + "'");
    }
  }
  return m;
}

inline Manifest load_manifest(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt,
                              const std::map<std::string, double>& tolerance_overrides = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read manifest '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_manifest(doc, seed_override, tolerance_overrides);
}

}  // namespace finsler
