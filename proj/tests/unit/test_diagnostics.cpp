#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dphase/diagnostics.hpp"
#include "dphase/errors.hpp"
#include "dphase/studies.hpp"

using namespace dphase;
using diagnostics::TrajectoryView;

namespace {

constexpr double kPi = std::numbers::pi;

exponent::ExponentData heat_data(double horizon) {
  exponent::ExponentData d;
  d.space_dim = 2;
  d.horizon = horizon;
  d.p = Field::constant(2.0);
  d.q = Field::constant(2.0);
  d.a = Field::constant(0.5);
  d.b = Field::constant(0.5);
  d.alpha = 1.0;
  return d;
}

double phi11(std::span<const double> x) { return 2.0 * std::sin(kPi * x[0]) * std::sin(kPi * x[1]); }

galerkin::Trajectory heat_run(double horizon, int m = 4, double tau = 1e-3) {
  galerkin::SolverConfig cfg;
  cfg.m_per_dim = m;
  cfg.tau = tau;
  cfg.eps = 0.01;
  auto t = galerkin::solve(cfg, heat_data(horizon), phi11, galerkin::zero_source());
  REQUIRE(t.complete);
  return t;
}

const diagnostics::CheckRow* by_anchor(const diagnostics::DiagnosticsReport& r, const std::string& anchor) {
  for (const auto& row : r.checks) {
    if (row.anchor == anchor) return &row;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("zero solution gives zero diagnostics") {
  galerkin::SolverConfig cfg;
  cfg.m_per_dim = 3;
  cfg.tau = 5e-3;
  const auto data = heat_data(0.02);
  const auto zero = [](std::span<const double>) { return 0.0; };
  const auto traj = galerkin::solve(cfg, data, zero, galerkin::zero_source());
  REQUIRE(traj.complete);
  const TrajectoryView view(traj, data);
  const auto energy = diagnostics::energy_identity_residual(view, galerkin::zero_source());
  CHECK(energy.max_relative == 0.0);
  const std::vector<double> sigma{0.5};
  CHECK(diagnostics::higher_integrability(view, sigma).front() == 0.0);
  const auto linf = diagnostics::linf_bound_check(traj, zero, galerkin::zero_source(), 17, 0.0);
  CHECK(linf.holds);
  for (double e : linf.envelope) CHECK(e == 0.0);
  CHECK(diagnostics::apriori_energy_bound(view, galerkin::zero_source()).holds);
}

TEST_CASE("heat run: energy series against the discrete closed form") {
  const auto traj = heat_run(0.05);
  const auto data = heat_data(0.05);
  diagnostics::Options opt;
  opt.second_order = false;
  const auto rep = diagnostics::run_diagnostics(traj, data, phi11, galerkin::zero_source(), opt);
  const double lambda = 2.0 * kPi * kPi;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double c = std::pow(1.0 + lambda * traj.tau, -static_cast<double>(k));
    CHECK(rep.series.l2_sq[k] == doctest::Approx(c * c).epsilon(1e-10));
    CHECK(rep.series.grad_l2_sq[k] == doctest::Approx(lambda * c * c).epsilon(1e-10));
    CHECK(rep.series.flux_energy_eps[k] == doctest::Approx(lambda * c * c).epsilon(1e-10));
  }
  // Implicit Euler dissipates an extra O(tau lambda) fraction; here tau lambda ~ 0.02.
  CHECK(rep.energy_relative_residual < 1.5e-2);
  CHECK(rep.energy_relative_residual > 1e-4);
  REQUIRE(by_anchor(rep, "eq:energy") != nullptr);
  CHECK(by_anchor(rep, "secderiboun")->verdict == diagnostics::Verdict::kPass);
  CHECK(by_anchor(rep, "gradbound")->verdict == diagnostics::Verdict::kPass);
  CHECK(by_anchor(rep, "est01")->verdict == diagnostics::Verdict::kPass);
  CHECK(by_anchor(rep, "est:bdd")->verdict == diagnostics::Verdict::kPass);
}

TEST_CASE("energy residual is first order in tau") {
  const auto data = heat_data(0.05);
  const auto coarse = heat_run(0.05, 3, 2e-3);
  const auto fine = heat_run(0.05, 3, 1e-3);
  const double rc = diagnostics::energy_identity_residual(TrajectoryView(coarse, data), galerkin::zero_source()).max_relative;
  const double rf = diagnostics::energy_identity_residual(TrajectoryView(fine, data), galerkin::zero_source()).max_relative;
  CHECK(rc / rf == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("higher integrability against a refined spatial quadrature") {
  const auto traj = heat_run(0.02, 8);
  const auto data = heat_data(0.02);
  const std::vector<double> sigma{0.5, 0.9};
  const auto got = diagnostics::higher_integrability(TrajectoryView(traj, data), sigma);

  // Oracle: order-48 Gauss-Legendre in space, trapezoid over the checkpoints.
  const TrajectoryView fine(traj, data, 48);
  for (std::size_t s = 0; s < sigma.size(); ++s) {
    const double e = 2.0 + 1.0 - sigma[s];
    std::vector<double> per;
    for (std::size_t k = 0; k < fine.checkpoints(); ++k) {
      const Eigen::MatrixXd g = fine.gradients(k);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < g.rows(); ++i) acc += fine.grid().weights()[static_cast<std::size_t>(i)] * std::pow(g.row(i).norm(), e);
      per.push_back(acc);
    }
    const auto times = fine.times();
    const double oracle = diagnostics::time_integral(times, per);
    CHECK(got[s] == doctest::Approx(oracle).epsilon(1e-6));
  }

  CHECK_THROWS_AS(diagnostics::higher_integrability(TrajectoryView(traj, data), std::vector<double>{1.0}), DomainError);
  CHECK_THROWS_AS(diagnostics::higher_integrability(TrajectoryView(traj, data), std::vector<double>{0.0}), DomainError);
  CHECK_THROWS_AS(diagnostics::higher_integrability(TrajectoryView(traj, data), std::vector<double>{-0.2}), DomainError);
}

TEST_CASE("time integral uses the trapezoid rule") {
  const std::vector<double> t{0.0, 0.1, 0.3, 0.6};
  std::vector<double> v;
  for (double x : t) v.push_back(2.0 * x + 1.0);
  CHECK(diagnostics::time_integral(t, v) == doctest::Approx(0.36 + 0.6));
}

TEST_CASE("second-order flux norm in the linear case") {
  const auto traj = heat_run(0.02, 3, 2e-3);
  const auto data = heat_data(0.02);
  const auto so = diagnostics::second_order_flux_norm(traj, data, 1.0 / 256.0, static_cast<int>(traj.states.size()));
  // F = a + b = 1, u = c(t) phi_11. The lattice sum covers [1.5h, 1 - 1.5h]^2, where
  // D_1 D_1 u integrates sin^2 sin^2 and D_1 D_2 u integrates cos^2 cos^2.
  const double lo = 1.5 / 256.0;
  const double s2 = (1.0 - 2.0 * lo) / 2.0 + std::sin(2.0 * kPi * lo) / (2.0 * kPi);
  const double c2 = (1.0 - 2.0 * lo) / 2.0 - std::sin(2.0 * kPi * lo) / (2.0 * kPi);
  std::vector<double> amp;
  for (const auto& s : traj.states) amp.push_back(s.coeffs.squaredNorm());
  const double time_part = diagnostics::time_integral(traj.times(), amp);
  REQUIRE(so.entries.size() == 4);
  for (const auto& e : so.entries) {
    const double spatial = e.i == e.j ? s2 * s2 : c2 * c2;
    CHECK(e.norm == doctest::Approx(std::sqrt(4.0 * std::pow(kPi, 4) * spatial * time_part)).epsilon(2e-3));
  }
  CHECK_FALSE(so.conditioning_warning);
  CHECK_THROWS_AS(diagnostics::second_order_flux_norm(traj, data, 0.3, 3), DomainError);
  CHECK_THROWS_AS(diagnostics::second_order_flux_norm(traj, data, 0.03, 3), DomainError);
}

TEST_CASE("stability pair for the heat equation") {
  galerkin::SolverConfig cfg;
  cfg.m_per_dim = 3;
  cfg.tau = 1e-3;
  const auto data = heat_data(0.03);
  const double delta = 0.1;
  const auto v0 = [&](std::span<const double> x) {
    return phi11(x) + delta * 2.0 * std::sin(2 * kPi * x[0]) * std::sin(kPi * x[1]);
  };
  const auto res = studies::stability_experiment(cfg, data, phi11, galerkin::zero_source(), v0, galerkin::zero_source());
  REQUIRE(res.failure.empty());
  CHECK(res.holds);
  const double lambda = 5.0 * kPi * kPi;
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    const double discrete = delta * delta * std::pow(1.0 + lambda * cfg.tau, -2.0 * static_cast<double>(k));
    CHECK(res.lhs[k] == doctest::Approx(discrete).epsilon(1e-9));
    CHECK(res.lhs[k] == doctest::Approx(delta * delta * std::exp(-2.0 * lambda * res.times[k])).epsilon(0.1));
  }
  CHECK(res.rhs == doctest::Approx(std::exp(0.03) * delta * delta).epsilon(1e-9));
}

TEST_CASE("L-infinity envelope with unit forcing") {
  galerkin::SolverConfig cfg;
  cfg.m_per_dim = 6;
  cfg.tau = 2e-3;
  const auto data = heat_data(0.05);
  const auto zero = [](std::span<const double>) { return 0.0; };
  const auto one = [](std::span<const double>, double) { return 1.0; };
  const auto traj = galerkin::solve(cfg, data, zero, one);
  REQUIRE(traj.complete);
  const auto rep = diagnostics::linf_bound_check(traj, zero, one, 33, 1e-3);
  CHECK(rep.holds);
  for (std::size_t k = 0; k < rep.bound.size(); ++k) {
    CHECK(rep.bound[k] == doctest::Approx(traj.states[k].time).epsilon(1e-12));
    CHECK(rep.envelope[k] <= rep.bound[k] + 1e-3);
  }
  CHECK(rep.envelope.back() > 0.0);
  CHECK_THROWS_AS(diagnostics::linf_bound_check(traj, zero, one, 1, 0.0), DomainError);
}

TEST_CASE("row helpers") {
  const auto pass = diagnostics::upper_bound_row("x", "eq:energy", diagnostics::CheckKind::kExact, 1.0, 2.0);
  CHECK(pass.verdict == diagnostics::Verdict::kPass);
  CHECK(pass.margin == doctest::Approx(1.0));
  const auto fail = diagnostics::upper_bound_row("x", "eq:energy", diagnostics::CheckKind::kCeiling, 3.0, 2.0);
  CHECK(fail.verdict == diagnostics::Verdict::kFail);
  CHECK(fail.margin < 0.0);
  CHECK(diagnostics::upper_bound_row("x", "a", diagnostics::CheckKind::kExact, 2.0 + 1e-13, 2.0, 1e-12).verdict ==
        diagnostics::Verdict::kPass);
  const auto mon = diagnostics::monitored_row("y", "b", 4.0);
  CHECK(mon.verdict == diagnostics::Verdict::kMonitor);
  CHECK(std::isnan(mon.bound));
}
