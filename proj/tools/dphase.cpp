// dphase: run, sweep, report and validate double-phase Galerkin scenarios.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dphase/runner.hpp"

int main(int argc, char** argv) {
  namespace rn = dphase::runner;
  CLI::App app{"Spectral Galerkin solver and diagnostics for double-phase parabolic problems"};
  app.set_version_flag("--version", std::string(rn::version()));
  app.require_subcommand(1);

  std::string config_path, run_dir, out_dir;
  std::optional<int> workers;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "scenario file (YAML)")->required();
    sub->add_option("--out,-o", out_dir, "artifact directory (default runs/<scenario>)");
    sub->add_option("--workers,-j", workers, "worker threads (default $DPHASE_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "solve one scenario and check its assertions");
  add_common(run);
  auto* sweep = app.add_subcommand("sweep", "run every member of the scenario's sweep block");
  add_common(sweep);
  auto* report = app.add_subcommand("report", "print the assertion digest of a run directory");
  report->add_option("dir", run_dir, "run or sweep directory")->required();
  auto* validate = app.add_subcommand("validate", "check structural conditions without solving");
  validate->add_option("config", config_path, "scenario file (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(rn::kConfigError);
  }

  rn::CommandOptions opts;
  opts.workers = workers;
  if (!out_dir.empty()) opts.out = out_dir;

  if (*run) return rn::cmd_run(config_path, opts, std::cout, std::cerr);
  if (*sweep) return rn::cmd_sweep(config_path, opts, std::cout, std::cerr);
  if (*report) return rn::cmd_report(run_dir, std::cout, std::cerr);
  return rn::cmd_validate(config_path, std::cout, std::cerr);
}
