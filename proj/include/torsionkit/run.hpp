#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "torsionkit/geometry.hpp"
#include "torsionkit/spectral.hpp"

namespace torsionkit {

using json = nlohmann::json;

#ifdef TORSIONKIT_VERSION
inline constexpr const char* kVersion = TORSIONKIT_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

inline constexpr int kSchemaVersion = 1;

enum class ExitCode : int { Ok = 0, CheckFailed = 1, Parse = 2, Validation = 3, Accuracy = 4 };

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string task;  // zeta, det, torsion, eta, multitorsion, verify, trace
  json body;         // task-specific fields (spectrum, geometry, suite, ...)
  double tolerance = 1e-8;
  std::vector<double> t_grid, t2_grid, u_grid;
  std::string out_dir = ".";
  std::string format = "json";  // json, csv, both
  std::uint64_t seed = 1;
  int threads = 1;

  // Throws ParseError with the location of the offending token or key.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  // Range and ordering checks; throws ValidationError.
  void validate() const;
  json to_json() const;
};

struct ReportedValue {
  std::string name;
  double value = 0.0;
  double error = 0.0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;  // header row, 17 significant digits
};

struct ResultManifest {
  json config;
  std::vector<ReportedValue> values;
  std::vector<CheckResult> checks;
  std::vector<Table> tables;
  double wall_time = 0.0;
  std::string version = kVersion;
  std::string config_hash;
  bool diagnostic = false;  // set when a result comes from fitted samples

  bool all_passed() const;
  const ReportedValue* find(const std::string& name) const;
  json to_json() const;
  static ResultManifest from_json(const json& j);
};

// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash(const json& config);

struct RunOutcome {
  int exit_code = 0;
  std::string message;
  ResultManifest manifest;
  std::vector<std::string> written;  // artifact paths
};

// Evaluates the config without writing files.
ResultManifest execute(const RunConfig& config);
// Parse, validate, execute and write artifacts; maps errors onto the exit-code contract.
RunOutcome run(const std::string& config_path, const json& overrides = json::object());
RunOutcome run_config(RunConfig config);

// Config records.
Factor parse_factor(const json& j);
FactorAction parse_action(const json& j);
QuotientGeometry parse_geometry(const json& j);

struct FitResult {
  AdmissibleExpansion expansion;
  double residual_rms = 0.0;  // sqrt(SSR / (n - k))
  double residual_max = 0.0;
  double condition = 0.0;     // of the column-scaled design matrix
  bool diagnostic = true;
};
// Least-squares coefficients of sum_p a_p t^p; needs >= 2 samples per power and
// two decades of t. Throws ConditioningError for an ill-conditioned design.
FitResult fit_expansion(const std::vector<std::pair<double, double>>& samples, const std::vector<double>& powers);

}  // namespace torsionkit
