#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigk/augmented.hpp"
#include "sigk/report.hpp"
#include "sigk/solver.hpp"

namespace sigk {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitThreshold = 3,
};

/// One requested check with its per-check overrides.
struct CheckRequest {
  std::string name;
  nlohmann::json overrides = nlohmann::json::object();
};

struct SuiteConfig {
  nlohmann::json problem;
  std::vector<CheckRequest> checks;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  nlohmann::json defaults = nlohmann::json::object();
  /// Directory of the config file; relative field paths resolve against it.
  std::string base_dir = ".";
  nlohmann::json sweep;
  nlohmann::json solve;
};

/// Parses and validates a suite config. Throws ConfigError naming any unknown check.
/// SIGK_OUTPUT_DIR overrides the output directory.
[[nodiscard]] SuiteConfig load_suite_config(const std::string& path);
[[nodiscard]] SuiteConfig parse_suite_config(const nlohmann::json& j, const std::string& base_dir = ".");

[[nodiscard]] const std::vector<std::string>& check_names();

/// Problem, field and their positive-form counterparts.
struct ProblemContext {
  ProblemSpec spec;
  std::optional<ManufacturedSolution> manufactured;
  ScalarField field;
  ProblemSpec positive_spec;
  ScalarField positive_field;
  /// Closed form of the positive-form field when one is known.
  std::optional<AnalyticField> positive_analytic;
  std::string field_source;
  /// The resolved "problem" block, kept for re-resolution at other grid sizes.
  nlohmann::json source;
  std::string base_dir;
};

/// Resolves the "problem" block. field_source "exact" samples the manufactured solution,
/// "solved" runs the Newton solver on its boundary data.
[[nodiscard]] ProblemContext resolve_problem(const nlohmann::json& problem, const std::string& base_dir);

/// Resolves the same problem at another number of points per axis. File fields cannot be resampled.
[[nodiscard]] ProblemContext resolve_at(const ProblemContext& ctx, int points);

/// Runs one named check; `ctx` may be null for checks that need no field. ThresholdError and
/// ConfigError propagate; every other error becomes a failed report naming the error class.
[[nodiscard]] CheckReport run_check(const CheckRequest& req, const ProblemContext* ctx, const SuiteConfig& cfg);

struct RunReport {
  std::vector<CheckReport> reports;
  nlohmann::json environment;

  /// Pass iff every report of kind "check" passes; probes only record.
  [[nodiscard]] bool pass() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Writes run.json and one <check>.csv per report into the directory.
void write_run(const RunReport& run, const std::string& dir);
/// h,lhs,rhs,residual rows of a report.
[[nodiscard]] std::string levels_csv(const CheckReport& r);

/// Command bodies; each returns an exit code and prints a short summary to stdout.
int cli_verify(const std::string& config_path);
int cli_solve(const std::string& config_path);
int cli_moser(int k, int n, const std::string& p, const std::string& which);
int cli_sweep(const std::string& config_path, const std::string& axis);

}  // namespace sigk
