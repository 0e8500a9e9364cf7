#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dphase/config.hpp"
#include "dphase/diagnostics.hpp"
#include "dphase/galerkin.hpp"

namespace dphase::runner {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,       ///< malformed config, failed validation, missing artifacts
  kAssertionFailure = 2,  ///< an exact or ceiling check failed
  kSolverFailure = 3,     ///< a time step could not be completed
};

const char* version();

struct Outcome {
  int exit_code = kOk;
  std::filesystem::path dir;
  galerkin::Trajectory trajectory;
  diagnostics::DiagnosticsReport report;
  std::string message;
};

/// Solves one configuration, evaluates diagnostics and writes the run
/// artifacts (manifest.json, timeseries.csv, higher_integrability.csv,
/// second_order.csv, snapshot_t<t>.csv) into `dir`. Validation failures
/// propagate as ValidationError.
Outcome run(const config::RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log);

/// Runs every sweep member into its own subdirectory of `dir` and writes
/// sweep_summary.csv plus a sweep manifest. Returns the worst exit code.
int sweep(const config::RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log);

/// CLI verbs. Each returns the process exit code and never throws.
struct CommandOptions {
  std::optional<std::filesystem::path> out;
  std::optional<int> workers;
};
int cmd_run(const std::filesystem::path& config_path, const CommandOptions& opts, std::ostream& out,
            std::ostream& err);
int cmd_sweep(const std::filesystem::path& config_path, const CommandOptions& opts, std::ostream& out,
              std::ostream& err);
int cmd_report(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

/// Derives a random bounded-data member from a base configuration: u_0 a
/// low-mode sine series, f zero or a bubble, p, q, a, b randomized within the
/// structural conditions. Deterministic in `seed`.
config::RunConfig random_member(const config::RunConfig& base, std::uint64_t seed);

}  // namespace dphase::runner
