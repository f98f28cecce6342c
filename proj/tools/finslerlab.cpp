// finslerlab: manifest runner, bundled verification suite and expression
// evaluator.
//
// Exit codes: 0 all verdicts true, 1 some verdict false, 2 usage, schema,
// expression or I/O error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "finsler/expr.hpp"
#include "finsler/manifest.hpp"
#include "finsler/runner.hpp"
#include "finsler/verify.hpp"

namespace {

std::map<std::string, double> parse_tolerances(const std::vector<std::string>& specs) {
  std::map<std::string, double> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--tol", "expected name=value, got '" + s + "'");
    try {
      std::size_t used = 0;
      const std::string value = s.substr(eq + 1);
      out[s.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--tol", "invalid number in '" + s + "'");
    }
  }
  return out;
}

std::vector<double> parse_coordinates(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument(item);
  }
  return out;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int cmd_run(const std::string& path, const std::string& out_path, const std::string& csv_path,
            std::optional<std::uint64_t> seed, const std::map<std::string, double>& tols, bool timings) {
  const auto start = std::chrono::steady_clock::now();
  const finsler::Manifest m = finsler::load_manifest(path, seed, tols);
  auto result = finsler::run_manifest(m);
  if (timings)
    result.report["timings"] = {{"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  const std::string text = result.report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else if (!write_file(out_path, text)) {
    std::cerr << "finslerlab: cannot write " << out_path << "\n";
    return 2;
  }
  if (!csv_path.empty() && !write_file(csv_path, result.csv)) {
    std::cerr << "finslerlab: cannot write " << csv_path << "\n";
    return 2;
  }
  for (const auto& [name, check] : result.report["checks"].items())
    std::cerr << (check["verdict"].get<bool>() ? "PASS " : "FAIL ") << name << "\n";
  return result.verdict ? 0 : 1;
}

int cmd_verify(const std::string& filter, bool flip, std::optional<std::uint64_t> seed,
               const std::map<std::string, double>& tols) {
  finsler::VerifyOptions opts;
  opts.tolerance_overrides = tols;
  opts.flip_curvature_sign = flip;
  if (seed) opts.seed = *seed;
  int failures = 0, rows = 0;
  std::printf("%-3s %-28s %-5s %8s  %s\n", "#", "id", "pass", "seconds", "detail");
  for (const auto& c : finsler::verification_suite()) {
    if (!filter.empty() && c.id.find(filter) == std::string::npos) continue;
    const auto r = finsler::run_criterion(c, opts);
    ++rows;
    if (!r.pass) ++failures;
    std::printf("%-3d %-28s %-5s %8.2f  %s\n", c.number, c.id.c_str(), r.pass ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
    std::fflush(stdout);
  }
  if (rows == 0) {
    std::cerr << "finslerlab: no criterion matches '" << filter << "'\n";
    return 2;
  }
  std::printf("%d/%d passed\n", rows - failures, rows);
  return failures == 0 ? 0 : 1;
}

int cmd_eval(const std::string& text, const std::string& at, int order) {
  const finsler::Expr e = finsler::parse_expression(text);
  std::vector<double> x;
  try {
    x = parse_coordinates(at);
  } catch (const std::exception&) {
    std::cerr << "finslerlab: --at expects comma-separated numbers\n";
    return 2;
  }
  if (x.empty() || static_cast<int>(x.size()) <= e.max_coordinate()) {
    std::cerr << "finslerlab: --at needs at least " << e.max_coordinate() + 1 << " coordinates\n";
    return 2;
  }
  auto ctx = finsler::JetContext::make(static_cast<int>(x.size()), order);
  const finsler::Jet j = e.eval_jet(ctx, x);
  nlohmann::json partials = nlohmann::json::array();
  for (std::size_t k = 0; k < ctx->size(); ++k)
    partials.push_back({{"index", ctx->multi_index(k)}, {"value", j.partial(ctx->multi_index(k))}});
  const nlohmann::json out{{"expr", e.to_string()}, {"at", x}, {"order", order}, {"value", j.value()}, {"partials", partials}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature verification engine for (alpha, beta)-metrics"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::vector<std::string> tol_specs;
  app.add_option("--seed", seed, "Seed for random sampling (overrides the manifest)");
  app.add_option("--tol", tol_specs, "Tolerance override name=value; '*' matches every tolerance")->take_all();

  auto* run = app.add_subcommand("run", "Run the checks of a JSON manifest");
  std::string manifest, out_path, csv_path;
  bool timings = false;
  run->add_option("manifest", manifest, "Manifest path")->required();
  run->add_option("--out", out_path, "Write the JSON report here instead of stdout");
  run->add_option("--csv", csv_path, "Write a per-point CSV table");
  run->add_option("--tol", tol_specs, "Tolerance override name=value")->take_all();
  run->add_option("--seed", seed, "Seed for random sampling");
  run->add_flag("--timings", timings, "Include wall-clock timings (makes the report non-reproducible)");

  auto* verify = app.add_subcommand("verify-paper", "Run the bundled verification suite");
  std::string filter;
  bool flip = false;
  verify->add_option("--filter", filter, "Only criteria whose id contains this text");
  verify->add_flag("--flip-curvature-sign", flip, "Use the opposite curvature-term signs (sensitivity check)");
  verify->add_option("--tol", tol_specs, "Tolerance override name=value")->take_all();
  verify->add_option("--seed", seed, "Seed for random scenarios");

  auto* eval = app.add_subcommand("eval", "Evaluate an expression and its partial derivatives");
  std::string expr_text, at;
  int order = 2;
  eval->add_option("--expr", expr_text, "Expression in x1..x8")->required();
  eval->add_option("--at", at, "Comma-separated coordinates")->required();
  eval->add_option("--order", order, "Derivative order")->check(CLI::Range(0, finsler::kMaxJetOrder));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const auto tols = parse_tolerances(tol_specs);
    if (*run) return cmd_run(manifest, out_path, csv_path, seed, tols, timings);
    if (*verify) return cmd_verify(filter, flip, seed, tols);
    return cmd_eval(expr_text, at, order);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "finslerlab: " << e.what() << "\n";
    return 2;
  } catch (const finsler::SchemaError& e) {
    std::cerr << "finslerlab: schema error " << e.what() << "\n";
    return 2;
  } catch (const finsler::SyntaxError& e) {
    std::cerr << "finslerlab: expression error at offset " << e.offset() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "finslerlab: " << e.what() << "\n";
    return 2;
  }
}
