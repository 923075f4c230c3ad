#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "torsionkit/run.hpp"

int main(int argc, char** argv) {
  using torsionkit::json;
  CLI::App app{"Spectral zeta functions, analytic torsion and multi-torsion from a JSON config"};
  app.set_version_flag("--version", std::string("torsionkit ") + torsionkit::kVersion);
  std::string config, out, format;
  double tol = 0.0;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config, "Config file (JSON)")->required();
  auto* out_opt = app.add_option("--out", out, "Output directory");
  auto* tol_opt = app.add_option("--tol", tol, "Tolerance, overrides the config");
  auto* fmt_opt = app.add_option("--format", format, "Artifacts to write")->check(CLI::IsMember({"json", "csv", "both"}));
  auto* seed_opt = app.add_option("--seed", seed, "Seed for matrix-model tasks");
  auto* thr_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(torsionkit::ExitCode::Parse);
  }
  json overrides = json::object();
  if (*out_opt) overrides["out_dir"] = out;
  if (*tol_opt) overrides["tolerance"] = tol;
  if (*fmt_opt) overrides["format"] = format;
  if (*seed_opt) overrides["seed"] = seed;
  if (*thr_opt) overrides["threads"] = threads;

  const torsionkit::RunOutcome r = torsionkit::run(config, overrides);
  if (r.exit_code == 0 || r.exit_code == 1) {
    for (const auto& v : r.manifest.values) std::cout << v.name << " = " << v.value << " +/- " << v.error << "\n";
    for (const auto& c : r.manifest.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    for (const auto& w : r.written) std::cout << "wrote " << w << "\n";
  }
  (r.exit_code == 0 ? std::cout : std::cerr) << r.message << "\n";
  return r.exit_code;
}
