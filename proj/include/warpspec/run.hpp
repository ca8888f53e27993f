#pragma once

#include "warpspec/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace warpspec {

/// Everything a CLI run needs. Optional fields take command-specific defaults.
struct RunConfig {
  std::string command;               ///< build-example | curvature-report | scan | verify-growth | check-identities
  std::optional<std::string> profile;
  int n = 3;
  double k = 1.0;
  double a = 1.0, p = 1.5;           ///< power_tail / log_tail parameters
  std::optional<double> R_max;
  double spacing = 0.01;
  double gamma = 1.0;
  std::optional<double> alpha;
  int j_max = 5;
  std::optional<double> lambda_lo, lambda_hi;
  double lambda_step = 1e-3;
  std::uint64_t seed = 20240601;
  int trials = 5;
  std::optional<double> t0;
  double s = 1.0, t = 20.0;          ///< identity window
  double identity_lambda = 1.0;
  double identity_tolerance = 1e-7;
  double lambda_tolerance = 2e-3;
  double ode_tolerance = 1e-6;
  double growth_residual_tolerance = 1e-4;
  double wronskian_tolerance = 1e-6;
  unsigned threads = 0;
  std::string output_dir;

  json to_json() const;
  /// Unknown keys and ill-typed values are ConfigError.
  static RunConfig from_json(const json& doc);
  bool operator==(const RunConfig&) const = default;
};

std::vector<std::string> run_commands();

/// Checks every precondition of the command. Throws ConfigError (or
/// CouplingTooWeak / OutsideRegime, both usage errors) before any computation.
void validate(const RunConfig& config);

struct CheckResult {
  std::string name;
  std::string invariant;
  bool passed = false;
  double value = 0;
  double tolerance = 0;
  std::optional<double> first_offending;  ///< grid point where the invariant first fails
  std::string detail;
};

struct RunReport {
  RunConfig config;
  std::vector<CheckResult> checks;
  json summary = json::object();
  double wall_clock = 0;
  std::vector<std::string> artifacts;

  bool passed() const;
  /// Wall-clock is left out when `with_wall_clock` is false, for byte comparisons.
  json to_json(bool with_wall_clock = true) const;
};

/// Validates, runs the command and writes artifacts (atomically) into
/// config.output_dir when it is set.
RunReport run(const RunConfig& config);

/// Profile named in the config, built on a grid ending at `R_max`.
WarpProfile make_run_profile(const RunConfig& config, const std::string& name, double R_max);

}  // namespace warpspec
