#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "finsler/manifest.hpp"
#include "finsler/runner.hpp"

using namespace finsler;
using nlohmann::json;

namespace {

std::string manifest_path(const std::string& name) { return std::string(MANIFEST_DIR) + "/" + name; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

json rotation_family_doc() { return read_json(manifest_path("rotation_family.json")); }

std::string schema_pointer(const json& doc) {
  try {
    parse_manifest(doc);
  } catch (const SchemaError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(FINSLERLAB_EXE) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string text;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) text.append(buf, n);
  const int status = pclose(pipe);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ManifestSchema, BundledManifestsParse) {
  for (const char* name : {"rotation_family.json", "wave_family.json", "flat_parallel_randers.json", "nonclosed_randers.json",
                           "funk.json", "polar_parallel_power.json", "sphere.json"}) {
    EXPECT_NO_THROW(load_manifest(manifest_path(name))) << name;
  }
}

TEST(ManifestSchema, ErrorsCarryJsonPointers) {
  json doc = read_json(manifest_path("flat_parallel_randers.json"));
  json missing_p = doc;
  missing_p["metric"].erase("p");
  EXPECT_EQ(schema_pointer(missing_p), "/metric/p");

  json big = doc;
  big["dimension"] = 9;
  EXPECT_EQ(schema_pointer(big), "/dimension");

  json bad_check = doc;
  bad_check["checks"].push_back("geodesics");
  EXPECT_EQ(schema_pointer(bad_check), "/checks/7");

  json dup = doc;
  dup["checks"].push_back("einstein");
  EXPECT_EQ(schema_pointer(dup), "/checks/7");

  json bad_expr = doc;
  bad_expr["metric"]["beta"][1] = "0.2*x3";
  EXPECT_EQ(schema_pointer(bad_expr), "/metric/beta/1");

  json family_only = doc;
  family_only["checks"] = {"pde_residuals"};
  EXPECT_EQ(schema_pointer(family_only), "/checks/0");

  json no_seed = rotation_family_doc();
  no_seed["samples"].erase("seed");
  EXPECT_EQ(schema_pointer(no_seed), "/samples/seed");
  EXPECT_NO_THROW(parse_manifest(no_seed, 5u));
}

TEST(ManifestSchema, ToleranceOverrides) {
  const Manifest m = parse_manifest(rotation_family_doc(), std::nullopt, {{"*", 1e-3}, {"einstein", 1e-4}});
  EXPECT_DOUBLE_EQ(m.tolerance("flag_curvature"), 1e-3);
  EXPECT_THROW(parse_manifest(rotation_family_doc(), std::nullopt, {{"nonsense", 1.0}}), SchemaError);
}

TEST(Runner, RotationFamilyIsEinsteinWithKnownCurvature) {
  const auto out = run_manifest(load_manifest(manifest_path("rotation_family.json")), 2);
  EXPECT_TRUE(out.verdict);
  EXPECT_TRUE(out.report["checks"]["einstein"]["verdict"].get<bool>());
  EXPECT_TRUE(out.report["checks"]["flag_curvature"]["verdict"].get<bool>());
  for (const auto& p : out.report["points"]) {
    ASSERT_EQ(p["status"], "ok");
    const double B = p["B"].get<double>();
    EXPECT_NEAR(p["lambda_mean"].get<double>(), -1.0 / std::sqrt(1.0 - B), 1e-9);
  }
}

TEST(Runner, FlatParallelRandersHasZeroCurvature) {
  const auto out = run_manifest(load_manifest(manifest_path("flat_parallel_randers.json")), 1);
  EXPECT_TRUE(out.verdict);
  for (const auto& p : out.report["points"]) {
    EXPECT_NEAR(p["lambda_mean"].get<double>(), 0.0, 1e-12);
    for (const auto& d : p["directions"]) EXPECT_NEAR(d["ricci"].get<double>(), 0.0, 1e-12);
  }
  EXPECT_LT(out.report["checks"]["reversibility"]["max_residuals"]["lambda_asymmetry"].get<double>(), 1e-12);
}

TEST(Runner, NonClosedRandersIsRejected) {
  const auto out = run_manifest(load_manifest(manifest_path("nonclosed_randers.json")), 1);
  EXPECT_FALSE(out.verdict);
  EXPECT_FALSE(out.report["checks"]["reversibility"]["verdict"].get<bool>());
  EXPECT_FALSE(out.report["checks"]["square_conditions"]["verdict"].get<bool>());
  EXPECT_TRUE(out.report["checks"]["ricci_identities"]["verdict"].get<bool>());
}

TEST(Runner, VerdictIsRecomputableFromResiduals) {
  for (const char* name : {"rotation_family.json", "nonclosed_randers.json", "sphere.json", "wave_family.json"}) {
    const auto out = run_manifest(load_manifest(manifest_path(name)), 2);
    bool all = true;
    for (const auto& [check, entry] : out.report["checks"].items()) {
      const double tol = entry["tolerance"].get<double>();
      bool ok = entry["evaluated"].get<int>() > 0;
      for (const auto& [k, v] : entry["max_residuals"].items()) ok = ok && v.get<double>() < tol;
      EXPECT_EQ(ok, entry["verdict"].get<bool>()) << name << " " << check;
      all = all && entry["verdict"].get<bool>();
    }
    EXPECT_EQ(all, out.report["verdict"].get<bool>()) << name;
  }
}

TEST(Runner, ReportIsIndependentOfWorkerCount) {
  const Manifest m = load_manifest(manifest_path("wave_family.json"));
  const auto a = run_manifest(m, 1);
  const auto b = run_manifest(m, 4);
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.csv, b.csv);
}

TEST(Runner, CsvHasOneRowPerPointAndResidualColumns) {
  const Manifest m = load_manifest(manifest_path("rotation_family.json"));
  const auto out = run_manifest(m, 2);
  std::istringstream in(out.csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("x1,x2,B,lambda,K,status,", 0), 0u);
  EXPECT_NE(header.find("einstein.lambda_spread"), std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, out.report["points"].size());
}

TEST(Runner, ManifestHashIsFnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  const json doc = rotation_family_doc();
  const auto out = run_manifest(parse_manifest(doc), 1);
  EXPECT_EQ(out.report["manifest_hash"].get<std::string>(), manifest_hash(doc));
  EXPECT_EQ(manifest_hash(doc).rfind("fnv1a64:", 0), 0u);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  std::string a, b;
  ASSERT_EQ(run_cli("run " + manifest_path("funk.json"), &a), 0);
  ASSERT_EQ(run_cli("run " + manifest_path("funk.json"), &b), 0);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(json::parse(a).contains("timings"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("run " + manifest_path("rotation_family.json")), 0);
  EXPECT_EQ(run_cli("run " + manifest_path("nonclosed_randers.json")), 1);
  EXPECT_EQ(run_cli("run /nonexistent/manifest.json"), 2);
  EXPECT_EQ(run_cli("run " + manifest_path("rotation_family.json") + " --tol einstein"), 2);
  EXPECT_EQ(run_cli("eval --expr 'x1+' --at 1"), 2);
  EXPECT_EQ(run_cli("eval --expr 'x3' --at 1,2"), 2);
  EXPECT_EQ(run_cli("verify-paper --filter no-such-criterion"), 2);
}

TEST(Cli, EvalPrintsPartials) {
  std::string text;
  ASSERT_EQ(run_cli("eval --expr 'x1^3*x2' --at 2,5 --order 2", &text), 0);
  const json j = json::parse(text);
  EXPECT_DOUBLE_EQ(j["value"].get<double>(), 40.0);
  bool found = false;
  for (const auto& p : j["partials"]) {
    if (p["index"] == json::array({1, 1})) {
      EXPECT_DOUBLE_EQ(p["value"].get<double>(), 12.0);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Cli, FlippedSignFailsRicciIdentities) {
  std::string text;
  EXPECT_EQ(run_cli("verify-paper --filter ricci-identities", &text), 0);
  EXPECT_EQ(run_cli("verify-paper --filter ricci-identities --flip-curvature-sign", &text), 1);
  EXPECT_NE(text.find("FAIL"), std::string::npos);
}

TEST(Runner, StructuralSprayToleratesDirectionsWithVanishingSpray) {
  // The polar spray vanishes along the radial direction; the comparison
  // must not divide roundoff by roundoff there.
  const auto out = run_manifest(load_manifest(manifest_path("polar_parallel_power.json")), 2);
  EXPECT_TRUE(out.report["checks"]["structural_vs_generic"]["verdict"].get<bool>());
  EXPECT_TRUE(out.verdict);
}

TEST(Runner, FamilyPointOnVZeroFallsBackToEngineCurvature) {
  const json doc = json::parse(R"({"dimension": 2,
    "metric": {"kind": "sqrt2d_family", "u": "-x2", "v": "x1", "B": "x1^2+x2^2"},
    "samples": {"points": [[0.0, 0.6]], "directions": 8}, "checks": ["flag_curvature"]})");
  const auto out = run_manifest(parse_manifest(doc), 1);
  const auto& p = out.report["points"][0];
  EXPECT_TRUE(p["K_uvB"].is_null());
  EXPECT_NEAR(p["K"].get<double>(), -1.25, 1e-10);
  EXPECT_TRUE(out.verdict);
  EXPECT_FALSE(out.report["checks"]["flag_curvature"]["max_residuals"].contains("uvB_formula"));
}
