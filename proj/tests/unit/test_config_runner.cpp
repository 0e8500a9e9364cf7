#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dphase/config.hpp"
#include "dphase/errors.hpp"
#include "dphase/runner.hpp"

using namespace dphase;
namespace fs = std::filesystem;

namespace {

const char* kHeat = R"(scenario: unit_heat
dim: 2
horizon: 0.02
p: 2
q: 2
a: 0.5
b: 0.5
exact:
  mode: [1, 1]
  decay: eigenvalue
solver:
  m_per_dim: 4
  tau: 5.0e-4
diagnostics:
  fd_h: 0.0625
output:
  snapshots: [0.0, 0.02]
  snapshot_lattice: 9
)";

int error_line(const std::string& text) {
  try {
    config::parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -100;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dphase_unit_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse: values and defaults") {
  const auto cfg = config::parse(kHeat);
  CHECK(cfg.scenario == "unit_heat");
  CHECK(cfg.data.space_dim == 2);
  CHECK(cfg.solver.m_per_dim == 4);
  CHECK(cfg.solver.eps == doctest::Approx(1e-2));
  REQUIRE(cfg.exact.has_value());
  CHECK(cfg.exact->decay == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi));
  CHECK(cfg.initial.family() == Field::Family::kSineSeries);
  CHECK(cfg.sweep.kind == config::SweepKind::kNone);
  CHECK(cfg.output == fs::path("runs") / "unit_heat");
}

TEST_CASE("parse errors carry the offending line") {
  CHECK(error_line("dim: 2\nhorizon: 0.1\nbogus: 3\n") == 3);
  CHECK(error_line("dim: 2\nsolver:\n  m_per_dim: 4\n  tua: 1\n") == 4);
  CHECK(error_line("dim: 2\nhorizon: [1, 2\n") > 0);
  CHECK(error_line("dim: 2\nhorizon: -1\n") == 2);
  CHECK(error_line("dim: 2\np:\n  family: wobbly\n") == 3);
  CHECK(error_line("dim: 2\nsolver:\n  eps: abc\n") == 3);
  CHECK(error_line("dim: 3\n") == 1);
  CHECK_THROWS_AS(config::parse(""), ConfigError);
  CHECK_THROWS_WITH_AS(config::parse("dim: 2\nbogus: 1\n"), doctest::Contains("unknown key 'bogus'"), ConfigError);
  CHECK_THROWS_AS(config::parse("sweep:\n  kind: eps\n  eps: [0.1, 0.2]\n"), ConfigError);
  CHECK_THROWS_AS(config::load("/nonexistent/dphase.yaml"), ConfigError);
}

TEST_CASE("validate command") {
  const auto dir = scratch("validate");
  fs::create_directories(dir);
  std::ofstream(dir / "ok.yaml") << kHeat;
  std::ofstream(dir / "gap.yaml") << "dim: 2\np: 2\nq: 2.6\n";
  std::ostringstream out, err;
  CHECK(runner::cmd_validate(dir / "ok.yaml", out, err) == runner::kOk);
  CHECK(runner::cmd_validate(dir / "gap.yaml", out, err) == runner::kConfigError);
  CHECK(err.str().find("eq:gap-z") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("random members are deterministic and admissible") {
  auto base = config::parse("scenario: r\ndim: 2\nalpha: 0.2\nhorizon: 0.02\n");
  const auto a = runner::random_member(base, 7);
  const auto b = runner::random_member(base, 7);
  const auto c = runner::random_member(base, 8);
  CHECK(a.scenario == "r_r7");
  CHECK(a.data.p.describe() == b.data.p.describe());
  CHECK(a.data.q.describe() == b.data.q.describe());
  CHECK(a.initial.describe() == b.initial.describe());
  CHECK(a.forcing.describe() == b.forcing.describe());
  CHECK(a.initial.describe() != c.initial.describe());
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto m = runner::random_member(base, seed);
    CHECK_NOTHROW(exponent::validate(m.data));
  }
}

TEST_CASE("run writes reproducible artifacts") {
  const auto cfg = config::parse(kHeat);
  const auto d1 = scratch("run1");
  const auto d2 = scratch("run2");
  std::ostringstream log;
  const auto o1 = runner::run(cfg, d1, log);
  const auto o2 = runner::run(cfg, d2, log);
  CHECK(o1.exit_code == runner::kOk);
  CHECK(o2.exit_code == runner::kOk);
  for (const char* f : {"manifest.json", "timeseries.csv", "higher_integrability.csv", "second_order.csv"}) {
    CHECK_MESSAGE(fs::exists(d1 / f), f);
  }
  for (const char* f : {"timeseries.csv", "higher_integrability.csv", "second_order.csv"}) {
    CHECK_MESSAGE(slurp(d1 / f) == slurp(d2 / f), f);
  }
  CHECK(slurp(d1 / "manifest.json").find("eq:energy") != std::string::npos);

  std::ostringstream rep, err;
  CHECK(runner::cmd_report(d1, rep, err) == runner::kOk);
  CHECK(rep.str().find("eq:energy") != std::string::npos);
  const auto empty = scratch("empty");
  fs::create_directories(empty);
  CHECK(runner::cmd_report(empty, rep, err) == runner::kConfigError);
  for (const auto& d : {d1, d2, empty}) fs::remove_all(d);
}
