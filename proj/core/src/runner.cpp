#include "dphase/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dphase/errors.hpp"
#include "dphase/exponent_model.hpp"
#include "dphase/studies.hpp"

#ifndef DPHASE_VERSION
#define DPHASE_VERSION "0.0.0"
#endif

namespace dphase::runner {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json validation_json(const exponent::ValidationReport& rep) {
  json j;
  j["passed"] = rep.passed();
  j["lipschitz_pq"] = number(rep.lipschitz_pq);
  j["lipschitz_ab"] = number(rep.lipschitz_ab);
  json conds = json::array();
  for (const auto& c : rep.conditions) {
    conds.push_back({{"anchor", c.anchor},
                     {"description", c.description},
                     {"passed", c.passed},
                     {"worst_value", number(c.worst_value)},
                     {"threshold", number(c.threshold)},
                     {"worst_node", c.worst_node}});
  }
  j["conditions"] = conds;
  return j;
}

json checks_json(const std::vector<diagnostics::CheckRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"name", r.name},
                   {"anchor", r.anchor},
                   {"kind", diagnostics::to_string(r.kind)},
                   {"verdict", diagnostics::to_string(r.verdict)},
                   {"value", number(r.value)},
                   {"bound", number(r.bound)},
                   {"margin", number(r.margin)},
                   {"note", r.note}});
  }
  return arr;
}

json resolved_json(const config::RunConfig& cfg) {
  const auto& d = cfg.data;
  const auto& s = cfg.solver;
  const auto& o = cfg.diagnostics;
  json j;
  j["dim"] = d.space_dim;
  j["horizon"] = d.horizon;
  j["alpha"] = d.alpha;
  j["probe"] = {{"space", d.lipschitz_probe_resolution}, {"time", d.time_probe_resolution}};
  j["fields"] = {{"p", d.p.describe()}, {"q", d.q.describe()}, {"a", d.a.describe()}, {"b", d.b.describe()}};
  j["initial"] = cfg.initial.describe();
  j["source"] = cfg.manufactured ? std::string("manufactured") : cfg.forcing.describe();
  if (cfg.exact) {
    j["exact"] = {{"mode", std::vector<int>(cfg.exact->mode.begin(), cfg.exact->mode.begin() + cfg.exact->dim)},
                  {"amplitude", cfg.exact->amplitude},
                  {"decay", cfg.exact->decay},
                  {"manufactured", cfg.manufactured}};
  }
  j["solver"] = {{"m_per_dim", s.m_per_dim},     {"eps", s.eps},
                 {"tau", s.tau},                 {"newton_tol", s.newton_tol},
                 {"newton_max_iter", s.newton_max_iter}, {"damping_halvings", s.damping_halvings},
                 {"tau_retries", s.tau_retries}, {"quad_order", s.quad_order}};
  j["diagnostics"] = {{"sigma_grid", o.sigma_grid},
                      {"energy_tolerance", o.energy_tolerance},
                      {"linf_slack", o.linf_slack},
                      {"linf_lattice", o.linf_lattice},
                      {"fd_h", o.fd_h},
                      {"second_order_samples", o.second_order_samples},
                      {"second_order", o.second_order},
                      {"interpolation_beta", o.interpolation_beta},
                      {"higher_integrability_ceiling", o.higher_integrability_ceiling},
                      {"second_order_ceiling", o.second_order_ceiling},
                      {"mms_tolerance", o.mms_tolerance}};
  j["sweep"] = {{"kind", config::to_string(cfg.sweep.kind)},
                {"eps", cfg.sweep.eps},
                {"m", cfg.sweep.m},
                {"deltas", cfg.sweep.deltas},
                {"perturbation_mode", cfg.sweep.perturbation_mode},
                {"members", cfg.sweep.members},
                {"tolerance", cfg.sweep.tolerance},
                {"ceiling", cfg.sweep.ceiling},
                {"ratio_ceiling", cfg.sweep.ratio_ceiling}};
  j["snapshots"] = cfg.snapshots;
  j["snapshot_lattice"] = cfg.snapshot_lattice;
  return j;
}

void write_timeseries(const fs::path& dir, const diagnostics::TimeSeries& ts) {
  std::ostringstream os;
  os << "t,l2_sq,flux_energy_eps,flux_energy_0,grad_l2_sq,energy_residual,ut_sq_accum,linf\n";
  for (std::size_t k = 0; k < ts.t.size(); ++k) {
    os << g17(ts.t[k]) << ',' << g17(ts.l2_sq[k]) << ',' << g17(ts.flux_energy_eps[k]) << ','
       << g17(ts.flux_energy_0[k]) << ',' << g17(ts.grad_l2_sq[k]) << ',' << g17(ts.energy_residual[k]) << ','
       << g17(ts.ut_sq_accum[k]) << ',' << g17(ts.linf[k]) << '\n';
  }
  write_text(dir / "timeseries.csv", os.str());
}

void write_tables(const fs::path& dir, const diagnostics::DiagnosticsReport& rep) {
  std::ostringstream hi;
  hi << "sigma,value\n";
  for (std::size_t s = 0; s < rep.sigma_grid.size(); ++s) {
    hi << g17(rep.sigma_grid[s]) << ',' << g17(rep.higher_integrability[s]) << '\n';
  }
  write_text(dir / "higher_integrability.csv", hi.str());
  std::ostringstream so;
  so << "i,j,norm\n";
  for (const auto& e : rep.second_order) so << e.i << ',' << e.j << ',' << g17(e.norm) << '\n';
  write_text(dir / "second_order.csv", so.str());
}

void write_snapshots(const fs::path& dir, const config::RunConfig& cfg, const galerkin::Trajectory& traj) {
  if (cfg.snapshots.empty() || traj.states.empty()) return;
  const int dim = traj.basis->dim;
  std::vector<double> axis(static_cast<std::size_t>(cfg.snapshot_lattice));
  for (int i = 0; i < cfg.snapshot_lattice; ++i) axis[static_cast<std::size_t>(i)] = i / (cfg.snapshot_lattice - 1.0);
  const galerkin::TensorEvaluator eval(*traj.basis, std::vector<std::vector<double>>(static_cast<std::size_t>(dim), axis));
  for (double t : cfg.snapshots) {
    // Nearest checkpoint.
    std::size_t best = 0;
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
      if (std::abs(traj.states[k].time - t) < std::abs(traj.states[best].time - t)) best = k;
    }
    const auto v = eval.evaluate(traj.states[best].coeffs, true);
    std::ostringstream os;
    os << (dim == 1 ? "x1,u,grad_norm\n" : "x1,x2,u,grad_norm\n");
    const std::size_t n = axis.size();
    for (std::size_t node = 0; node < eval.size(); ++node) {
      os << g17(axis[node % n]) << ',';
      if (dim == 2) os << g17(axis[node / n]) << ',';
      double g2 = 0.0;
      for (int d = 0; d < dim; ++d) g2 += std::pow(v.grad[static_cast<std::size_t>(d)][static_cast<Eigen::Index>(node)], 2);
      os << g17(v.u[static_cast<Eigen::Index>(node)]) << ',' << g17(std::sqrt(g2)) << '\n';
    }
    write_text(dir / ("snapshot_t" + short_num(t) + ".csv"), os.str());
  }
}

// Forcing certification: int_{Q_T} |grad f|^2 and the boundary trace of f.
void forcing_rows(const config::RunConfig& cfg, const galerkin::Trajectory& traj,
                  std::vector<diagnostics::CheckRow>& rows) {
  if (cfg.manufactured || traj.states.empty()) return;
  const int dim = cfg.data.space_dim;
  const quad::QuadratureGrid grid(
      dim, cfg.solver.quad_order > 0 ? cfg.solver.quad_order : quad::default_order(cfg.solver.m_per_dim));
  std::vector<double> per, times;
  std::array<double, kMaxDim> g{};
  for (const auto& s : traj.states) {
    times.push_back(s.time);
    std::vector<double> parts(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      cfg.forcing.gradient(grid.node(i), s.time, {g.data(), static_cast<std::size_t>(dim)});
      double n2 = 0.0;
      for (int d = 0; d < dim; ++d) n2 += g[static_cast<std::size_t>(d)] * g[static_cast<std::size_t>(d)];
      parts[i] = grid.weights()[i] * n2;
    }
    per.push_back(quad::pairwise_sum(parts));
  }
  rows.push_back(diagnostics::monitored_row("forcing gradient energy", "Thm 2.2",
                                            diagnostics::time_integral(times, per)));
  double trace = 0.0;
  const int probes = 33;
  std::array<double, kMaxDim> x{};
  for (const auto& s : traj.states) {
    for (int face = 0; face < 2 * dim; ++face) {
      for (int i = 0; i < (dim == 1 ? 1 : probes); ++i) {
        const int fixed = face / 2;
        x[static_cast<std::size_t>(fixed)] = face % 2;
        if (dim == 2) x[static_cast<std::size_t>(1 - fixed)] = i / (probes - 1.0);
        trace = std::max(trace, std::abs(cfg.forcing.value({x.data(), static_cast<std::size_t>(dim)}, s.time)));
      }
    }
  }
  rows.push_back(diagnostics::monitored_row("forcing boundary trace max", "Thm 2.2", trace,
                                            trace > 0.0 ? "f does not vanish on the boundary" : ""));
}

json manifest_base(const config::RunConfig& cfg, const std::string& kind) {
  json m;
  m["kind"] = kind;
  m["scenario"] = cfg.scenario;
  m["version"] = version();
  m["config_path"] = cfg.source_path.string();
  m["config_text"] = cfg.source_text;
  m["resolved"] = resolved_json(cfg);
  m["seed"] = cfg.seed;
  m["workers"] = cfg.workers;
  return m;
}

std::string status_of(int code) {
  switch (code) {
    case kOk: return "ok";
    case kConfigError: return "config_error";
    case kAssertionFailure: return "assertion_failure";
    case kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

}  // namespace

const char* version() { return DPHASE_VERSION; }

// ---------------------------------------------------------------------------

Outcome run(const config::RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  Outcome out;
  out.dir = dir;
  json manifest = manifest_base(cfg, "run");
  json timings;

  auto t0 = Clock::now();
  const auto validation = exponent::validate(cfg.data);
  timings["validate_s"] = seconds_since(t0);
  manifest["validation"] = validation_json(validation);

  fs::create_directories(dir);
  const auto u0 = config::initial_datum(cfg);
  const auto source = config::source_term(cfg);

  log << "[" << cfg.scenario << "] solving: m_per_dim=" << cfg.solver.m_per_dim << " eps=" << cfg.solver.eps
      << " tau=" << cfg.solver.tau << " T=" << cfg.data.horizon << '\n';
  t0 = Clock::now();
  out.trajectory = galerkin::solve(cfg.solver, cfg.data, u0, source);
  timings["solve_s"] = seconds_since(t0);
  const auto& traj = out.trajectory;
  int substepped = 0, newton = 0;
  for (const auto& s : traj.steps) {
    substepped += s.substeps > 1;
    newton += s.newton_iterations;
  }
  manifest["trajectory"] = {{"complete", traj.complete},
                            {"failure", traj.failure},
                            {"tau", traj.tau},
                            {"checkpoints", traj.states.size()},
                            {"final_time", traj.states.empty() ? 0.0 : traj.states.back().time},
                            {"newton_iterations", newton},
                            {"substepped_steps", substepped}};

  t0 = Clock::now();
  bool have_report = false;
  std::string diag_error;
  if (traj.states.size() >= 2) {
    try {
      out.report = diagnostics::run_diagnostics(traj, cfg.data, u0, source, cfg.diagnostics);
      forcing_rows(cfg, traj, out.report.checks);
      have_report = true;
    } catch (const std::exception& e) {
      diag_error = e.what();
    }
  }
  timings["diagnostics_s"] = seconds_since(t0);

  t0 = Clock::now();
  if (have_report) {
    write_timeseries(dir, out.report.series);
    write_tables(dir, out.report);
  }
  write_snapshots(dir, cfg, traj);
  timings["output_s"] = seconds_since(t0);

  if (!traj.complete) {
    out.exit_code = kSolverFailure;
    out.message = "solver failure: " + traj.failure;
  } else if (!have_report) {
    out.exit_code = kAssertionFailure;
    out.message = "diagnostics failed: " + diag_error;
  } else if (!out.report.passed()) {
    out.exit_code = kAssertionFailure;
    std::string failed;
    for (const auto& r : out.report.checks) {
      if (r.verdict == diagnostics::Verdict::kFail) failed += (failed.empty() ? "" : ", ") + r.anchor;
    }
    out.message = "assertion failure: " + failed;
  } else {
    out.message = "all checks passed";
  }

  manifest["checks"] = checks_json(out.report.checks);
  if (have_report) manifest["energy_relative_residual"] = number(out.report.energy_relative_residual);
  if (!diag_error.empty()) manifest["diagnostics_error"] = diag_error;
  manifest["timings"] = timings;
  manifest["exit_code"] = out.exit_code;
  manifest["status"] = status_of(out.exit_code);
  manifest["message"] = out.message;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  log << "[" << cfg.scenario << "] " << out.message << " (exit " << out.exit_code << ")\n";
  return out;
}

// ---------------------------------------------------------------------------

config::RunConfig random_member(const config::RunConfig& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  config::RunConfig cfg = base;
  const int dim = base.data.space_dim;
  cfg.exact.reset();
  cfg.manufactured = false;
  cfg.diagnostics.exact.reset();

  const int max_mode = std::min(2, base.solver.m_per_dim);
  std::vector<SineTerm> terms;
  const int count = 1 + static_cast<int>(unit(rng) * 3.0);
  for (int i = 0; i < count; ++i) {
    SineTerm term;
    for (int d = 0; d < dim; ++d) term.mode.push_back(1 + static_cast<int>(unit(rng) * max_mode) % max_mode);
    term.amplitude = uni(-0.6, 0.6);
    terms.push_back(std::move(term));
  }
  // Implicit Euler loses about tau * lambda / 2 of the energy per unit time;
  // the step is cut so the energy check stays meaningful for the datum.
  double lambda_max = 0.0;
  for (const auto& term : terms) {
    double k2 = 0.0;
    for (int k : term.mode) k2 += static_cast<double>(k) * k;
    lambda_max = std::max(lambda_max, std::numbers::pi * std::numbers::pi * k2);
  }
  cfg.solver.tau = std::min(base.solver.tau, base.diagnostics.energy_tolerance / (2.0 * lambda_max));
  cfg.initial = Field::sine_series(std::move(terms));
  cfg.forcing = unit(rng) < 0.5 ? Field::constant(0.0) : Field::bubble(uni(-4.0, 4.0), dim);

  const double floor = exponent::exponent_floor(dim);
  const double gap = exponent::r_star(dim);
  const double p0 = uni(std::max(floor + 0.3, 1.7), 2.3);
  const double slope = uni(-0.1, 0.1);
  std::vector<double> grad(static_cast<std::size_t>(dim), 0.0);
  grad[0] = slope;
  cfg.data.p = Field::affine(p0, grad);
  cfg.data.q = Field::constant(p0 + uni(-0.5, 0.5) * (gap - 2.0 * std::abs(slope) - 0.05));
  const double a = uni(0.2, 1.0), b = uni(0.0, 1.0);
  cfg.data.a = Field::constant(a);
  cfg.data.b = Field::constant(b);
  cfg.data.alpha = a + b;
  cfg.scenario = base.scenario + "_r" + std::to_string(seed);
  return cfg;
}

namespace {

struct SummaryRow {
  std::string metric;
  int k = 0;
  double from = 0.0;
  double to = 0.0;
  double value = 0.0;
  std::string verdict;
};

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "metric,k,from,to,value,verdict\n";
  for (const auto& r : rows) {
    os << r.metric << ',' << r.k << ',' << g17(r.from) << ',' << g17(r.to) << ',' << g17(r.value) << ','
       << r.verdict << '\n';
  }
  return os.str();
}

const char* pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

// Max/min ratio of positive entries.
double spread(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : v) {
    if (!(x > 0.0)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi > 0.0 ? hi / lo : 1.0;
}

std::string member_name(const std::string& prefix, std::size_t i, double param) {
  std::ostringstream os;
  os << prefix << '_' << std::setw(2) << std::setfill('0') << i << '_' << short_num(param);
  return os.str();
}

}  // namespace

int sweep(const config::RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  using config::SweepKind;
  if (cfg.sweep.kind == SweepKind::kNone) throw ConfigError("configuration has no sweep block");
  exponent::validate(cfg.data);
  fs::create_directories(dir);
  const auto t0 = Clock::now();

  // Member configurations.
  std::vector<config::RunConfig> members;
  std::vector<std::string> names;
  const auto& sc = cfg.sweep;
  switch (sc.kind) {
    case SweepKind::kEps:
      for (std::size_t i = 0; i < sc.eps.size(); ++i) {
        auto m = cfg;
        m.solver.eps = sc.eps[i];
        members.push_back(m);
        names.push_back(member_name("eps", i, sc.eps[i]));
      }
      break;
    case SweepKind::kM:
      for (std::size_t i = 0; i < sc.m.size(); ++i) {
        auto m = cfg;
        m.solver.m_per_dim = sc.m[i];
        members.push_back(m);
        names.push_back(member_name("m", i, sc.m[i]));
      }
      break;
    case SweepKind::kStability: {
      members.push_back(cfg);
      names.push_back(member_name("delta", 0, 0.0));
      const auto basis = galerkin::build_basis(cfg.data.space_dim, cfg.solver.m_per_dim);
      const std::size_t j = basis.index_of(sc.perturbation_mode);
      if (j >= basis.size()) throw ConfigError("perturbation mode is not in the Galerkin basis");
      for (std::size_t i = 0; i < sc.deltas.size(); ++i) {
        auto m = cfg;
        // u_0 + delta phi_mode, kept exactly representable as a field.
        m.initial = Field::sine_series({SineTerm{sc.perturbation_mode, sc.deltas[i]}});
        members.push_back(m);
        names.push_back(member_name("delta", i + 1, sc.deltas[i]));
      }
      break;
    }
    case SweepKind::kRandom:
      for (int i = 0; i < sc.members; ++i) {
        members.push_back(random_member(cfg, cfg.seed + static_cast<std::uint64_t>(i)));
        names.push_back("random_" + std::to_string(cfg.seed + static_cast<std::uint64_t>(i)));
      }
      break;
    case SweepKind::kNone:
      break;
  }

  // Stability perturbations add to the base datum, which a single Field cannot
  // express; those members are solved with a composed initial datum.
  std::vector<galerkin::SpaceFunction> initials;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (sc.kind == SweepKind::kStability && i > 0) {
      initials.push_back([base = config::initial_datum(cfg), pert = config::initial_datum(members[i])](
                             std::span<const double> x) { return base(x) + pert(x); });
    } else {
      initials.push_back(config::initial_datum(members[i]));
    }
  }

  std::vector<Outcome> outcomes(members.size());
  std::vector<std::string> errors(members.size());
  studies::parallel_for(members.size(), cfg.workers, [&](std::size_t i) {
    std::ostringstream member_log;
    try {
      if (sc.kind == SweepKind::kStability && i > 0) {
        // Solve with the composed datum; diagnostics use the same datum.
        auto m = members[i];
        Outcome o;
        o.dir = dir / names[i];
        fs::create_directories(o.dir);
        const auto src = config::source_term(m);
        o.trajectory = galerkin::solve(m.solver, m.data, initials[i], src);
        if (o.trajectory.complete) {
          o.report = diagnostics::run_diagnostics(o.trajectory, m.data, initials[i], src, m.diagnostics);
          write_timeseries(o.dir, o.report.series);
          write_tables(o.dir, o.report);
          o.exit_code = o.report.passed() ? kOk : kAssertionFailure;
        } else {
          o.exit_code = kSolverFailure;
        }
        json man = manifest_base(m, "stability_member");
        man["perturbation"] = {{"mode", sc.perturbation_mode}, {"delta", sc.deltas[i - 1]}};
        man["checks"] = checks_json(o.report.checks);
        man["exit_code"] = o.exit_code;
        man["status"] = status_of(o.exit_code);
        write_text(o.dir / "manifest.json", man.dump(2) + "\n");
        outcomes[i] = std::move(o);
      } else {
        outcomes[i] = run(members[i], dir / names[i], member_log);
      }
    } catch (const ValidationError& e) {
      errors[i] = std::string("validation failure: ") + e.what();
      outcomes[i].exit_code = kConfigError;
    } catch (const std::exception& e) {
      errors[i] = e.what();
      outcomes[i].exit_code = kConfigError;
    }
  });

  int worst = kOk;
  json member_json = json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    worst = std::max(worst, outcomes[i].exit_code);
    member_json.push_back({{"name", names[i]},
                           {"exit_code", outcomes[i].exit_code},
                           {"status", status_of(outcomes[i].exit_code)},
                           {"error", errors[i]}});
    log << "  member " << names[i] << ": exit " << outcomes[i].exit_code
        << (errors[i].empty() ? "" : " (" + errors[i] + ")") << '\n';
  }

  std::vector<SummaryRow> rows;
  std::vector<diagnostics::CheckRow> checks;
  auto collect = [&](std::size_t i) { return outcomes[i].trajectory; };
  bool all_complete = std::all_of(outcomes.begin(), outcomes.end(),
                                  [](const Outcome& o) { return o.trajectory.complete; });

  auto ratio_checks = [&](const std::vector<double>& params, const std::string& label) {
    // eps/m-uniform boundedness of the higher-integrability and second-order tables.
    const std::size_t ns = cfg.diagnostics.sigma_grid.size();
    for (std::size_t s = 0; s < ns; ++s) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].report.higher_integrability.size() == ns) {
          vals.push_back(outcomes[i].report.higher_integrability[s]);
          rows.push_back({"higher_integrability_sigma_" + short_num(cfg.diagnostics.sigma_grid[s]),
                          static_cast<int>(i), params[i], params[i], vals.back(), ""});
        }
      }
      const double r = spread(vals);
      checks.push_back(diagnostics::upper_bound_row(
          "higher integrability max/min over " + label + " sigma=" + short_num(cfg.diagnostics.sigma_grid[s]),
          "eq:strong-est", diagnostics::CheckKind::kCeiling, r, sc.ratio_ceiling));
      rows.push_back({"higher_integrability_ratio_sigma_" + short_num(cfg.diagnostics.sigma_grid[s]), 0,
                      params.front(), params.back(), r, pass_fail(r <= sc.ratio_ceiling)});
    }
    if (cfg.diagnostics.second_order) {
      std::vector<double> worst_norm;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        double w = 0.0;
        for (const auto& e : outcomes[i].report.second_order) w = std::max(w, e.norm);
        if (!outcomes[i].report.second_order.empty()) {
          worst_norm.push_back(w);
          rows.push_back({"second_order_max", static_cast<int>(i), params[i], params[i], w, ""});
        }
      }
      const double r = spread(worst_norm);
      checks.push_back(diagnostics::upper_bound_row("second-order norm max/min over " + label, "Thm 2.4(2)",
                                                    diagnostics::CheckKind::kCeiling, r, sc.ratio_ceiling));
      rows.push_back({"second_order_ratio", 0, params.front(), params.back(), r, pass_fail(r <= sc.ratio_ceiling)});
    }
  };

  switch (sc.kind) {
    case SweepKind::kEps: {
      std::vector<galerkin::Trajectory> trajs;
      for (std::size_t i = 0; i < outcomes.size(); ++i) trajs.push_back(collect(i));
      const auto rep = studies::continuation_from(std::move(trajs), cfg.data, sc.tolerance, sc.ceiling);
      for (std::size_t k = 0; k < rep.d.size(); ++k) {
        rows.push_back({"d_k", static_cast<int>(k), rep.eps[k], rep.eps[k + 1], rep.d[k], ""});
        rows.push_back({"G_eps", static_cast<int>(k), rep.eps[k], rep.eps[k + 1], rep.pairing[k],
                        pass_fail(rep.pairing[k] >= -1e-10)});
      }
      rows.push_back({"d_k_monotone", 0, sc.eps.front(), sc.eps.back(), rep.monotone ? 1.0 : 0.0,
                      pass_fail(rep.monotone)});
      auto mono = diagnostics::monitored_row("eps-continuation Cauchy decay", "Lemma 8.1",
                                             rep.d.empty() ? 0.0 : rep.d.back(),
                                             "tolerance " + short_num(sc.tolerance) + " per step");
      mono.kind = diagnostics::CheckKind::kExact;
      mono.verdict = rep.monotone && rep.below_ceiling && rep.failure.empty() ? diagnostics::Verdict::kPass
                                                                               : diagnostics::Verdict::kFail;
      mono.bound = sc.ceiling;
      mono.margin = sc.ceiling - mono.value;
      checks.push_back(mono);
      auto g = diagnostics::monitored_row("G_eps nonnegative along continuation", "eq:mon-strict",
                                          rep.pairing.empty() ? 0.0 : *std::min_element(rep.pairing.begin(), rep.pairing.end()));
      g.kind = diagnostics::CheckKind::kExact;
      g.verdict = rep.pairing_nonnegative ? diagnostics::Verdict::kPass : diagnostics::Verdict::kFail;
      checks.push_back(g);
      ratio_checks(sc.eps, "eps");
      break;
    }
    case SweepKind::kM: {
      std::vector<galerkin::Trajectory> trajs;
      for (std::size_t i = 0; i < outcomes.size(); ++i) trajs.push_back(collect(i));
      const auto rep = studies::refinement_from(std::move(trajs), cfg.data, sc.tolerance);
      for (std::size_t k = 0; k < rep.d.size(); ++k) {
        rows.push_back({"d_m", static_cast<int>(k), static_cast<double>(rep.m[k]),
                        static_cast<double>(rep.m[k + 1]), rep.d[k], ""});
      }
      rows.push_back({"d_m_monotone", 0, static_cast<double>(sc.m.front()), static_cast<double>(sc.m.back()),
                      rep.monotone ? 1.0 : 0.0, pass_fail(rep.monotone)});
      auto mono = diagnostics::monitored_row("m-refinement Cauchy decay", "Lemma 7.2",
                                             rep.d.empty() ? 0.0 : rep.d.back());
      mono.kind = diagnostics::CheckKind::kExact;
      mono.verdict = rep.passed() ? diagnostics::Verdict::kPass : diagnostics::Verdict::kFail;
      checks.push_back(mono);
      std::vector<double> params(sc.m.begin(), sc.m.end());
      ratio_checks(params, "m");
      break;
    }
    case SweepKind::kStability: {
      std::vector<double> mods;
      bool gronwall = true;
      for (std::size_t i = 1; i < outcomes.size(); ++i) {
        const auto res = studies::stability_from(outcomes[0].trajectory, outcomes[i].trajectory, cfg.data,
                                                 initials[0], config::source_term(cfg), initials[i],
                                                 config::source_term(members[i]));
        gronwall = gronwall && res.failure.empty() && res.holds;
        mods.push_back(res.grad_modular);
        rows.push_back({"gronwall_margin", static_cast<int>(i - 1), sc.deltas[i - 1], sc.deltas[i - 1],
                        res.worst_margin, pass_fail(res.failure.empty() && res.holds)});
        rows.push_back({"grad_modular", static_cast<int>(i - 1), sc.deltas[i - 1], sc.deltas[i - 1],
                        res.grad_modular, ""});
      }
      bool decreasing = true;
      for (std::size_t k = 1; k < mods.size(); ++k) decreasing = decreasing && mods[k] < mods[k - 1];
      auto g = diagnostics::monitored_row("Gronwall stability", "eq:stab-2", gronwall ? 1.0 : 0.0);
      g.kind = diagnostics::CheckKind::kExact;
      g.verdict = gronwall ? diagnostics::Verdict::kPass : diagnostics::Verdict::kFail;
      checks.push_back(g);
      auto d = diagnostics::monitored_row("gradient modular decreases with the perturbation", "eq:stab",
                                          mods.empty() ? 0.0 : mods.back());
      d.kind = diagnostics::CheckKind::kExact;
      d.verdict = decreasing ? diagnostics::Verdict::kPass : diagnostics::Verdict::kFail;
      checks.push_back(d);
      break;
    }
    case SweepKind::kRandom: {
      int passed = 0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto* row = outcomes[i].report.find("L-infinity envelope");
        const double margin = row ? row->margin : std::numeric_limits<double>::quiet_NaN();
        rows.push_back({"linf_margin", static_cast<int>(i), 0.0, 0.0, margin,
                        pass_fail(row && row->verdict == diagnostics::Verdict::kPass)});
        rows.push_back({"energy_relative_residual", static_cast<int>(i), 0.0, 0.0,
                        outcomes[i].report.energy_relative_residual, ""});
        passed += outcomes[i].exit_code == kOk;
      }
      checks.push_back(diagnostics::monitored_row("random members passing all checks", "est:bdd", passed,
                                                  std::to_string(passed) + "/" + std::to_string(outcomes.size())));
      break;
    }
    case SweepKind::kNone:
      break;
  }

  write_text(dir / "sweep_summary.csv", summary_csv(rows));
  const bool sweep_ok = std::none_of(checks.begin(), checks.end(), [](const diagnostics::CheckRow& r) {
    return r.verdict == diagnostics::Verdict::kFail;
  });
  int code = worst;
  if (!sweep_ok) code = std::max(code, static_cast<int>(kAssertionFailure));
  if (!all_complete) code = std::max(code, static_cast<int>(kSolverFailure));

  json manifest = manifest_base(cfg, "sweep");
  manifest["sweep_kind"] = config::to_string(sc.kind);
  manifest["members"] = member_json;
  manifest["checks"] = checks_json(checks);
  manifest["timings"] = {{"total_s", seconds_since(t0)}};
  manifest["exit_code"] = code;
  manifest["status"] = status_of(code);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  log << "[" << cfg.scenario << "] sweep finished (exit " << code << ")\n";
  return code;
}

// ---------------------------------------------------------------------------
// CLI verbs

namespace {

config::RunConfig load_with(const fs::path& path, const CommandOptions& opts) {
  auto cfg = config::load(path);
  if (opts.workers) cfg.workers = *opts.workers;
  if (opts.out) cfg.output = *opts.out;
  return cfg;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string cell_text(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_number()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v.get<double>());
    return buf;
  }
  return v.dump();
}

}  // namespace

int cmd_run(const fs::path& config_path, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = load_with(config_path, opts);
    const auto outcome = run(cfg, cfg.output, out);
    out << "artifacts: " << outcome.dir.string() << '\n';
    if (outcome.exit_code != kOk) err << outcome.message << '\n';
    return outcome.exit_code;
  } catch (const ValidationError& e) {
    err << "validation failure: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << config_path.string() << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_sweep(const fs::path& config_path, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = load_with(config_path, opts);
    const int code = sweep(cfg, cfg.output, out);
    out << "artifacts: " << cfg.output.string() << '\n';
    return code;
  } catch (const ValidationError& e) {
    err << "validation failure: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << config_path.string() << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_validate(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = config::load(config_path);
    const auto rep = exponent::check(cfg.data);
    out << "scenario " << cfg.scenario << " (N=" << cfg.data.space_dim << ", T=" << cfg.data.horizon << ")\n";
    for (const auto& c : rep.conditions) {
      out << "  " << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(12) << c.anchor << c.description
          << "  worst=" << c.worst_value << " threshold=" << c.threshold << '\n';
    }
    out << "  Lipschitz estimates: L_pq=" << rep.lipschitz_pq << " L_ab=" << rep.lipschitz_ab << '\n';
    if (const auto* bad = rep.first_failure()) {
      err << "validation failure: " << bad->anchor << ": " << bad->description << '\n';
      return kConfigError;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << config_path.string() << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    err << "no manifest.json in " << run_dir.string() << '\n';
    return kConfigError;
  }
  json m;
  try {
    std::ifstream in(manifest_path);
    m = json::parse(in);
  } catch (const std::exception& e) {
    err << "unreadable manifest: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string kind = m.value("kind", "run");
  out << "dphase " << m.value("version", "?") << " report: " << m.value("scenario", "?") << " [" << kind
      << "] status=" << m.value("status", "?") << '\n';
  if (m.contains("message")) out << "  " << m["message"].get<std::string>() << '\n';
  out << '\n'
      << std::left << std::setw(16) << "anchor" << std::setw(10) << "verdict" << std::setw(11) << "kind"
      << std::setw(12) << "value" << std::setw(12) << "bound" << std::setw(12) << "margin"
      << "check\n";
  for (const auto& r : m.value("checks", json::array())) {
    out << std::left << std::setw(16) << r.value("anchor", "") << std::setw(10) << r.value("verdict", "")
        << std::setw(11) << r.value("kind", "") << std::setw(12) << cell_text(r["value"]) << std::setw(12)
        << cell_text(r["bound"]) << std::setw(12) << cell_text(r["margin"]) << r.value("name", "");
    const std::string note = r.value("note", "");
    if (!note.empty()) out << "  (" << note << ')';
    out << '\n';
  }

  std::error_code ec;
  fs::create_directories(run_dir / "plots", ec);
  if (ec) {
    err << "cannot create plots directory: " << ec.message() << '\n';
    return kConfigError;
  }
  int written = 0;
  auto emit = [&](const std::string& name, const std::vector<std::pair<std::string, std::string>>& xy) {
    std::ostringstream os;
    for (const auto& [x, y] : xy) os << x << ' ' << y << '\n';
    write_text(run_dir / "plots" / (name + ".dat"), os.str());
    ++written;
  };

  if (fs::exists(run_dir / "timeseries.csv")) {
    const auto rows = read_csv(run_dir / "timeseries.csv");
    if (!rows.empty()) {
      for (std::size_t c = 1; c < rows[0].size(); ++c) {
        std::vector<std::pair<std::string, std::string>> xy;
        for (std::size_t r = 1; r < rows.size(); ++r) {
          if (rows[r].size() > c) xy.emplace_back(rows[r][0], rows[r][c]);
        }
        emit(rows[0][c], xy);
      }
    }
  }
  if (fs::exists(run_dir / "higher_integrability.csv")) {
    const auto rows = read_csv(run_dir / "higher_integrability.csv");
    std::vector<std::pair<std::string, std::string>> xy;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() >= 2) xy.emplace_back(rows[r][0], rows[r][1]);
    }
    emit("higher_integrability", xy);
  }
  if (fs::exists(run_dir / "sweep_summary.csv")) {
    const auto rows = read_csv(run_dir / "sweep_summary.csv");
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> series;
    bool header = false;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 6) continue;
      const auto& metric = rows[r][0];
      if (metric == "d_k" || metric == "d_m" || metric == "G_eps" || metric == "grad_modular" ||
          metric == "gronwall_margin") {
        if (!header) {
          out << "\nCauchy / stability table\n  " << std::left << std::setw(16) << "metric" << std::setw(5) << "k"
              << std::setw(14) << "from" << std::setw(14) << "to" << "value\n";
          header = true;
        }
        out << "  " << std::left << std::setw(16) << metric << std::setw(5) << rows[r][1] << std::setw(14)
            << short_num(std::stod(rows[r][2])) << std::setw(14) << short_num(std::stod(rows[r][3]))
            << std::setw(14) << short_num(std::stod(rows[r][4])) << rows[r][5] << '\n';
      }
      series["sweep_" + metric].emplace_back(rows[r][1], rows[r][4]);
    }
    for (const auto& [name, xy] : series) emit(name, xy);
  }
  if (kind == "sweep") {
    out << "\nmembers\n";
    for (const auto& mem : m.value("members", json::array())) {
      out << "  " << std::left << std::setw(28) << mem.value("name", "") << mem.value("status", "") << '\n';
    }
  }
  out << "\nwrote " << written << " plot files to " << (run_dir / "plots").string() << '\n';
  return kOk;
}

}  // namespace dphase::runner
