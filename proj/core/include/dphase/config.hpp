#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dphase/diagnostics.hpp"
#include "dphase/exponent_model.hpp"
#include "dphase/field.hpp"
#include "dphase/galerkin.hpp"
#include "dphase/manufactured.hpp"

namespace dphase::config {

enum class SweepKind { kNone, kEps, kM, kStability, kRandom };
std::string to_string(SweepKind k);

struct SweepConfig {
  SweepKind kind = SweepKind::kNone;
  std::vector<double> eps;
  std::vector<int> m;
  std::vector<double> deltas;
  std::vector<int> perturbation_mode{2, 1};
  int members = 10;  ///< random sweeps
  double tolerance = 0.1;
  double ceiling = 1e6;
  /// Max/min ceiling for the eps-uniform boundedness checks across members.
  double ratio_ceiling = 3.0;
};

struct RunConfig {
  std::string scenario;
  std::filesystem::path source_path;
  std::string source_text;

  exponent::ExponentData data;
  Field initial = Field::constant(0.0);
  Field forcing = Field::constant(0.0);
  /// Optional single-mode exact solution; with manufactured == true the
  /// forcing is replaced by the manufactured source for it.
  std::optional<mms::ModeSolution> exact;
  bool manufactured = false;

  galerkin::SolverConfig solver;
  diagnostics::Options diagnostics;
  SweepConfig sweep;

  std::filesystem::path output;
  int workers = 1;
  std::uint64_t seed = 20240607;
  /// Times at which lattice snapshots are written.
  std::vector<double> snapshots;
  int snapshot_lattice = 33;
};

/// Parses a YAML run configuration. Errors carry the offending line.
RunConfig parse(const std::string& text, const std::filesystem::path& origin = {});
RunConfig load(const std::filesystem::path& path);

/// Initial datum u_0(x) = initial(x, 0).
galerkin::SpaceFunction initial_datum(const RunConfig& cfg);
/// Forcing f(x, t): the configured field or the manufactured source.
galerkin::SourceTerm source_term(const RunConfig& cfg);

/// Worker count from DPHASE_WORKERS, or 1.
int default_workers();

}  // namespace dphase::config
