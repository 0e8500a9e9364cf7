// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dphase/config.hpp"
#include "dphase/diagnostics.hpp"
#include "dphase/errors.hpp"
#include "dphase/flux.hpp"
#include "dphase/manufactured.hpp"
#include "dphase/runner.hpp"
#include "dphase/studies.hpp"
#include "dphase/varexp_spaces.hpp"

using namespace dphase;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

config::RunConfig scenario(const std::string& name) {
  return config::load(fs::path(DPHASE_SCENARIO_DIR) / (name + ".yaml"));
}

galerkin::Trajectory solve(const config::RunConfig& cfg) {
  return galerkin::solve(cfg.solver, cfg.data, config::initial_datum(cfg), config::source_term(cfg));
}

double phi(std::span<const double> x, int k1, int k2) {
  return 2.0 * std::sin(k1 * kPi * x[0]) * std::sin(k2 * kPi * x[1]);
}

// ---------------------------------------------------------------------------

Result heat_mms() {
  const auto cfg = scenario("heat_mms");
  const auto start = std::chrono::steady_clock::now();
  const auto traj = solve(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!traj.complete) return {false, "solver failed: " + traj.failure};
  const double err = mms::l2_error(traj.states.back(), *traj.basis, *cfg.exact);
  return {err <= 5e-3 && secs <= 30.0, "L2 error " + fmt(err) + " (<= 5e-3), " + fmt(secs) + " s (<= 30)"};
}

Result forced_mms() {
  auto cfg = scenario("forced_mms");
  std::vector<double> errs;
  for (double tau : {4e-3, 2e-3, 1e-3}) {
    cfg.solver.tau = tau;
    const auto traj = solve(cfg);
    if (!traj.complete) return {false, "solver failed at tau " + fmt(tau)};
    errs.push_back(mms::l2_error(traj.states.back(), *traj.basis, *cfg.exact));
  }
  const double o1 = std::log2(errs[0] / errs[1]), o2 = std::log2(errs[1] / errs[2]);
  const bool ok = std::abs(o1 - 1.0) <= 0.3 && std::abs(o2 - 1.0) <= 0.3;
  return {ok, "errors " + fmt(errs[0]) + ", " + fmt(errs[1]) + ", " + fmt(errs[2]) + "; orders " + fmt(o1) + ", " +
                  fmt(o2)};
}

Result energy_equality() {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(DPHASE_SCENARIO_DIR)) {
    if (e.path().extension() == ".yaml" && e.path().stem() != "gap_violation") names.push_back(e.path().stem());
  }
  std::sort(names.begin(), names.end());
  bool ok = true;
  std::ostringstream detail;
  double worst = 0.0, lo_ratio = 1e300, hi_ratio = 0.0;
  for (const auto& name : names) {
    auto cfg = scenario(name);
    double res[2];
    for (int h = 0; h < 2; ++h) {
      cfg.solver.tau = h == 0 ? 1e-3 : 5e-4;
      const auto traj = solve(cfg);
      if (!traj.complete) return {false, name + ": solver failed"};
      const diagnostics::TrajectoryView view(traj, cfg.data);
      res[h] = diagnostics::energy_identity_residual(view, config::source_term(cfg)).max_relative;
    }
    worst = std::max(worst, res[0]);
    if (res[0] > 1e-2) {
      ok = false;
      detail << name << " residual " << fmt(res[0]) << "; ";
    }
    if (res[0] == 0.0 && res[1] == 0.0) {
      detail << name << " has zero data; ";
      continue;
    }
    const double ratio = res[0] / res[1];
    lo_ratio = std::min(lo_ratio, ratio);
    hi_ratio = std::max(hi_ratio, ratio);
    if (ratio < 1.5 || ratio > 3.0) {
      ok = false;
      detail << name << " halving ratio " << fmt(ratio) << "; ";
    }
  }
  detail << names.size() << " scenarios, worst residual " << fmt(worst) << ", ratios in [" << fmt(lo_ratio) << ", "
         << fmt(hi_ratio) << "]";
  return {ok, detail.str()};
}

Result gronwall() {
  const auto cfg = scenario("stability");
  const auto u0 = config::initial_datum(cfg);
  const auto f = config::source_term(cfg);
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0, failures = 0;
  double worst_margin = 1e300;
  for (int pair = 0; pair < 20; ++pair) {
    const int k1 = 1 + static_cast<int>(rng() % 3), k2 = 1 + static_cast<int>(rng() % 3);
    const double delta = 0.005 + 0.195 * unit(rng);
    const double eta = pair % 2 ? 2.0 * unit(rng) - 1.0 : 0.0;
    const galerkin::SpaceFunction v0 = [=](std::span<const double> x) { return u0(x) + delta * phi(x, k1, k2); };
    const galerkin::SourceTerm g = [=](std::span<const double> x, double t) {
      return f(x, t) + eta * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    };
    const auto r = studies::stability_experiment(cfg.solver, cfg.data, u0, f, v0, g);
    if (!r.failure.empty()) ++failures;
    violations += r.violations;
    worst_margin = std::min(worst_margin, r.worst_margin);
  }
  return {violations == 0 && failures == 0,
          "20 pairs, " + std::to_string(violations) + " violations, " + std::to_string(failures) +
              " solver failures, worst margin " + fmt(worst_margin)};
}

flux::GradVec random_vec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), lg(-3.0, 1.0);
  flux::GradVec v(2);
  const double s = std::pow(10.0, lg(rng));
  v << s * u(rng), s * u(rng);
  return v;
}

// Random smooth scalar field: a short trigonometric polynomial.
std::function<double(std::span<const double>)> random_smooth(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double c0 = u(rng), c1 = u(rng), c2 = u(rng), c3 = u(rng);
  const int k1 = 1 + static_cast<int>(rng() % 3), k2 = 1 + static_cast<int>(rng() % 3);
  return [=](std::span<const double> x) {
    return c0 + c1 * std::sin(k1 * kPi * x[0]) + c2 * std::cos(k2 * kPi * x[1]) + c3 * x[0] * x[1];
  };
}

std::function<double(std::span<const double>)> random_exponent(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base = lo + (hi - lo) * u(rng) * 0.5;
  const double slope = (hi - base) * u(rng);
  const double wobble = 0.5 * std::min(base - lo, hi - base - slope) * u(rng);
  return [=](std::span<const double> x) { return base + slope * x[0] + wobble * std::sin(kPi * x[1]); };
}

struct Sampler {
  quad::QuadratureGrid grid;
  std::shared_ptr<const quad::DiscreteMeasure> measure;
  explicit Sampler(int order) : grid(2, order), measure(quad::spatial_measure(grid)) {}

  varexp::SampledField scalar(const std::function<double(std::span<const double>)>& f) const {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.node(i));
    return {measure, 1, std::move(v)};
  }
  varexp::SampledField vector(const std::function<double(std::span<const double>)>& f1,
                              const std::function<double(std::span<const double>)>& f2) const {
    std::vector<double> v;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      v.push_back(f1(grid.node(i)));
      v.push_back(f2(grid.node(i)));
    }
    return {measure, 2, std::move(v)};
  }
};

Result monotonicity() {
  std::mt19937_64 rng(5151);
  std::uniform_real_distribution<double> p_d(1.05, 4.0), eps_d(0.0, 1.0);
  int negative = 0, branch = 0, branch_samples = 0;
  for (int i = 0; i < 100000; ++i) {
    const double p = p_d(rng), eps = eps_d(rng);
    const auto xi = random_vec(rng), eta = random_vec(rng);
    const double s = flux::monotonicity_gap(xi, eta, p, eps);
    if (s < 0.0) ++negative;
    if (p >= 2.0) {
      ++branch_samples;
      const double lower =
          0.5 * (flux::gamma_eps(xi, p, eps) + flux::gamma_eps(eta, p, eps)) * (xi - eta).squaredNorm();
      if (s < lower * (1.0 - 1e-12)) ++branch;
    }
  }

  exponent::ExponentData data;
  data.p = Field::affine(1.8, {0.4, 0.0});
  data.q = Field::affine(2.2, {-0.4, 0.0});
  data.a = Field::constant(0.4);
  data.b = Field::constant(0.4);
  const Sampler s(20);
  const auto coef = varexp::sample_coefficients(s.grid, data, 0.0);
  int g_negative = 0;
  double g_min = 1e300;
  for (int pair = 0; pair < 100; ++pair) {
    const double eps = eps_d(rng);
    const auto gu = s.vector(random_smooth(rng), random_smooth(rng));
    const auto gv = s.vector(random_smooth(rng), random_smooth(rng));
    const double g = varexp::pairing_G_eps(gu, gv, eps, coef);
    g_min = std::min(g_min, g);
    if (g < 0.0) ++g_negative;
  }
  return {negative == 0 && branch == 0 && g_negative == 0,
          "1e5 samples: " + std::to_string(negative) + " negative S_p, " + std::to_string(branch) + "/" +
              std::to_string(branch_samples) + " p>=2 lower-bound violations; 100 pairs: " +
              std::to_string(g_negative) + " negative G_eps (min " + fmt(g_min) + ")"};
}

Result varexp_suite() {
  const Sampler s(24);
  std::mt19937_64 rng(6161);
  int lux_bad = 0, sandwich_bad = 0, holder_bad = 0, closed_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = s.scalar(random_smooth(rng));
    const auto g = s.scalar(random_smooth(rng));
    const auto r = s.scalar(random_exponent(rng, 1.2, 4.0));
    const double lam = varexp::luxemburg_norm(f, r, 1e-12);
    if (lam > 0.0) {
      std::vector<double> scaled = f.values;
      for (double& v : scaled) v /= lam;
      const double m = varexp::modular({f.measure, 1, scaled}, r);
      if (!(m >= 1.0 - 1e-9 && m <= 1.0)) ++lux_bad;
    }
    if (!varexp::check_modular_norm_sandwich(f, r).holds) ++sandwich_bad;
    if (!varexp::holder_pairing_check(f, g, r).holds) ++holder_bad;

    // Constant exponent: |c|_r = |c| and A_r(c) = |c|^r on the unit square.
    std::uniform_real_distribution<double> cd(-3.0, 3.0), rd(1.1, 5.0);
    const double c = cd(rng), rc = rd(rng);
    const auto cf = s.scalar([c](auto) { return c; });
    const auto rf = s.scalar([rc](auto) { return rc; });
    const double expect_mod = std::pow(std::abs(c), rc);
    if (std::abs(varexp::modular(cf, rf) - expect_mod) > 1e-10 * std::max(1.0, expect_mod)) ++closed_bad;
    if (std::abs(varexp::luxemburg_norm(cf, rf, 1e-13) - std::abs(c)) > 1e-10 * std::max(1.0, std::abs(c))) {
      ++closed_bad;
    }
  }
  return {lux_bad + sandwich_bad + holder_bad + closed_bad == 0,
          "100 trials: Luxemburg " + std::to_string(lux_bad) + ", sandwich " + std::to_string(sandwich_bad) +
              ", Holder " + std::to_string(holder_bad) + ", closed forms " + std::to_string(closed_bad) + " failures"};
}

Result higher_integrability() {
  const auto base = scenario("unordered");
  const std::vector<double> sigma{0.1, 0.3, 0.5};
  std::vector<double> lo(3, 1e300), hi(3, 0.0);
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    for (int m : {4, 8, 16}) {
      auto cfg = base;
      cfg.solver.eps = eps;
      cfg.solver.m_per_dim = m;
      const auto traj = solve(cfg);
      if (!traj.complete) return {false, "solver failed at eps " + fmt(eps) + ", m " + std::to_string(m)};
      const auto v = diagnostics::higher_integrability(diagnostics::TrajectoryView(traj, cfg.data), sigma);
      for (std::size_t s = 0; s < 3; ++s) {
        lo[s] = std::min(lo[s], v[s]);
        hi[s] = std::max(hi[s], v[s]);
      }
    }
  }
  bool ok = true;
  std::string detail = "max/min over 12 runs:";
  for (std::size_t s = 0; s < 3; ++s) {
    const double ratio = hi[s] / lo[s];
    ok = ok && std::isfinite(ratio) && ratio <= 3.0;
    detail += " sigma=" + fmt(sigma[s]) + " " + fmt(ratio);
  }
  return {ok, detail};
}

studies::Problem problem_of(const config::RunConfig& cfg) {
  return {cfg.data, config::initial_datum(cfg), config::source_term(cfg)};
}

studies::ContinuationReport continuation(const std::string& name) {
  const auto cfg = scenario(name);
  return studies::eps_continuation_study(cfg.solver, problem_of(cfg), cfg.sweep.eps, 0.1);
}

// Shared between criteria 8 and 9.
const studies::ContinuationReport& unordered_continuation() {
  static const auto rep = continuation("unordered_sweep");
  return rep;
}

Result cauchy_decay() {
  std::string detail;
  bool ok = true;
  for (const auto* name : {"unordered_sweep", "p_laplacian_sweep"}) {
    const auto rep = std::string(name) == "unordered_sweep" ? unordered_continuation() : continuation(name);
    bool strict = rep.failure.empty() && rep.d.size() == 4;
    for (std::size_t k = 1; k < rep.d.size(); ++k) strict = strict && rep.d[k] <= 1.1 * rep.d[k - 1];
    ok = ok && strict;
    detail += std::string(name) + " d =";
    for (double d : rep.d) detail += " " + fmt(d);
    detail += "; ";
  }
  const auto lin = continuation("linear_eps_sweep");
  double lin_max = 0.0;
  for (double d : lin.d) lin_max = std::max(lin_max, d);
  ok = ok && lin.failure.empty() && lin_max == 0.0;
  detail += "linear max d = " + fmt(lin_max);
  return {ok, detail};
}

Result second_order() {
  const auto cfg = scenario("unordered_sweep");
  const auto& rep = unordered_continuation();
  if (!rep.failure.empty()) return {false, "continuation failed: " + rep.failure};
  double lo = 1e300, hi = 0.0, worst_h = 0.0;
  for (const auto& traj : rep.members) {
    const auto coarse = diagnostics::second_order_flux_norm(traj, cfg.data, 1.0 / 128.0, 11);
    const auto fine = diagnostics::second_order_flux_norm(traj, cfg.data, 1.0 / 256.0, 11);
    double mx = 0.0;
    for (std::size_t e = 0; e < fine.entries.size(); ++e) {
      const double a = coarse.entries[e].norm, b = fine.entries[e].norm;
      if (!std::isfinite(b)) return {false, "non-finite norm"};
      mx = std::max(mx, b);
      worst_h = std::max(worst_h, std::abs(a - b) / b);
    }
    lo = std::min(lo, mx);
    hi = std::max(hi, mx);
  }
  const double ratio = hi / lo;
  return {ratio <= 3.0 && worst_h <= 0.25,
          "eps-ratio " + fmt(ratio) + " (<= 3), worst h-change " + fmt(100.0 * worst_h) + "% (<= 25%)"};
}

Result linf_envelope() {
  const auto base = scenario("random_linf");
  int failures = 0, solver_failures = 0;
  double worst = 1e300;
  for (int i = 0; i < 50; ++i) {
    const auto cfg = runner::random_member(base, base.seed + static_cast<std::uint64_t>(i));
    const auto traj = solve(cfg);
    if (!traj.complete) {
      ++solver_failures;
      continue;
    }
    const auto r = diagnostics::linf_bound_check(traj, config::initial_datum(cfg), config::source_term(cfg),
                                                 cfg.diagnostics.linf_lattice, 1e-3);
    worst = std::min(worst, r.worst_margin);
    if (!r.holds) ++failures;
  }
  return {failures == 0 && solver_failures == 0,
          "50 members: " + std::to_string(failures) + " violations, " + std::to_string(solver_failures) +
              " solver failures, worst margin " + fmt(worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Result (*fn)();
  };
  const Criterion criteria[] = {
      {"heat MMS exactness", heat_mms},
      {"forced nonlinear MMS order", forced_mms},
      {"energy equality", energy_equality},
      {"Gronwall stability", gronwall},
      {"monotonicity suite", monotonicity},
      {"variable-exponent space suite", varexp_suite},
      {"higher integrability", higher_integrability},
      {"eps-continuation Cauchy decay", cauchy_decay},
      {"second-order flux norms", second_order},
      {"L-infinity envelope", linf_envelope},
  };
  int failed = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Result r;
    const auto start = std::chrono::steady_clock::now();
    try {
      r = c.fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!r.pass) ++failed;
    std::printf("%s %2d %s: %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", index, c.name, r.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
