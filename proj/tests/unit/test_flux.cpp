#include <doctest.h>

#include <cmath>
#include <random>

#include "dphase/errors.hpp"
#include "dphase/flux.hpp"

using namespace dphase;
using flux::FluxParams;
using flux::GradVec;
using exponent::PointCoefficients;

namespace {

GradVec vec(double x, double y) {
  GradVec v(2);
  v << x, y;
  return v;
}

GradVec random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Log-uniform magnitude spreads samples over several decades.
  std::uniform_real_distribution<double> lg(-3.0, 1.0);
  GradVec v = vec(u(rng), u(rng));
  if (v.norm() == 0.0) v(0) = 1.0;
  return v.normalized() * scale * std::pow(10.0, lg(rng));
}

PointCoefficients random_coefficients(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> e(1.1, 3.0), c(0.0, 1.0);
  return {e(rng), e(rng), c(rng), c(rng)};
}

}  // namespace

TEST_CASE("beta_eps closed values") {
  CHECK(flux::beta_eps(vec(0, 0), 0.1) == doctest::Approx(0.01));
  CHECK(flux::beta_eps(vec(3, 4), 0.0) == 25.0);
}

TEST_CASE("beta_power at the origin") {
  CHECK(flux::beta_power(0.0, 1.5) == 0.0);
  CHECK(flux::beta_power(0.0, 0.0) == 1.0);
  CHECK_THROWS_AS(flux::beta_power(0.0, -0.2), SingularityError);
  CHECK(flux::beta_power(4.0, 2.0) == doctest::Approx(4.0));
  CHECK(flux::beta_power(4.0, 3.0) == doctest::Approx(8.0));
}

TEST_CASE("interchange sandwich |xi|^{2mu} <= beta^mu <= 2^mu (1 + |xi|^{2mu})") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mu_d(0.0, 3.0), eps_d(0.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const GradVec xi = random_vec(rng, 1.0);
    const double mu = mu_d(rng), eps = eps_d(rng);
    const double n2 = xi.squaredNorm();
    const double b = std::pow(flux::beta_eps(xi, eps), mu);
    if (!(std::pow(n2, mu) <= b && b <= std::pow(2.0, mu) * (1.0 + std::pow(n2, mu)))) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("flux density special cases") {
  const GradVec xi = vec(0.7, -1.3);
  CHECK(flux::flux_density({2.0, 2.5, 1.0, 0.0}, xi, {0.3, 0.0, 0.0}) == 1.0);
  const double eps = 0.2;
  const double beta = flux::beta_eps(xi, eps);
  CHECK(flux::flux_density({2.4, 2.4, 0.5, 0.5}, xi, {eps, 0.0, 0.0}) ==
        doctest::Approx(std::pow(beta, 0.2)).epsilon(1e-14));
  CHECK(flux::flux_density({2.4, 2.1, 0.3, 0.6}, xi, {eps, 1.0, -0.5}) ==
        doctest::Approx(0.3 * std::pow(beta, 0.7) + 0.6 * std::pow(beta, -0.2)).epsilon(1e-14));
}

TEST_CASE("null-eps lower bound a|xi|^{p+s1} + b|xi|^{q+s2} <= F beta") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> s_d(0.0, 1.0), eps_d(0.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto c = random_coefficients(rng);
    const GradVec xi = random_vec(rng, 2.0);
    const FluxParams prm{eps_d(rng), s_d(rng), s_d(rng)};
    const double n = xi.norm();
    const double lhs = c.a * std::pow(n, c.p + prm.s1) + c.b * std::pow(n, c.q + prm.s2);
    const double rhs = flux::flux_density(c, xi, prm) * flux::beta_eps(xi, prm.eps);
    if (lhs > rhs * (1.0 + 1e-14)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("null-eps two-branch bound F beta <= branch") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> s_d(0.0, 1.0), eps_d(0.01, 1.0);
  int violations = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto c = random_coefficients(rng);
    const FluxParams prm{eps_d(rng), s_d(rng), s_d(rng)};
    const GradVec xi = random_vec(rng, prm.eps * 3.0);
    const double lhs = flux::flux_density(c, xi, prm) * flux::beta_eps(xi, prm.eps);
    if (lhs > flux::null_eps_branch_bound(c, xi, prm) * (1.0 + 1e-13)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("flux vector basics") {
  const PointCoefficients c{2.3, 1.9, 0.4, 0.7};
  CHECK(flux::flux_vector(c, vec(0, 0), 0.1).norm() == 0.0);
  CHECK(flux::flux_vector(c, vec(0, 0), 0.0).norm() == 0.0);
  const GradVec xi = vec(-0.4, 2.2);
  CHECK((flux::flux_vector({2.0, 2.0, 0.3, 0.7}, xi, 0.5) - xi).norm() < 1e-15);
}

TEST_CASE("flux vector is the gradient of the energy density") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> eps_d(0.05, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto c = random_coefficients(rng);
    const double eps = eps_d(rng);
    const GradVec xi = random_vec(rng, 2.0);
    const GradVec fv = flux::flux_vector(c, xi, eps);
    GradVec fd(2);
    for (int d = 0; d < 2; ++d) {
      const double h = 1e-5 * std::max(1.0, std::abs(xi(d)));
      GradVec xp = xi, xm = xi;
      xp(d) += h;
      xm(d) -= h;
      fd(d) = (flux::energy_density(c, xp, eps) - flux::energy_density(c, xm, eps)) / (2.0 * h);
    }
    worst = std::max(worst, (fv - fd).norm() / std::max(fv.norm(), 1e-3));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("flux Jacobian: identity in the linear case, symmetric, matches finite differences") {
  const GradVec xi0 = vec(0.3, 0.9);
  CHECK((flux::flux_jacobian({2.0, 2.0, 0.5, 0.5}, xi0, 0.1) - flux::GradMat::Identity(2, 2)).norm() < 1e-15);

  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> eps_d(0.05, 1.0);
  double worst_sym = 0.0, worst_fd = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto c = random_coefficients(rng);
    const double eps = eps_d(rng);
    const GradVec xi = random_vec(rng, 2.0);
    const auto jac = flux::flux_jacobian(c, xi, eps);
    worst_sym = std::max(worst_sym, (jac - jac.transpose()).norm());
    flux::GradMat fd(2, 2);
    for (int d = 0; d < 2; ++d) {
      const double h = 1e-6 * std::max(1.0, std::abs(xi(d)));
      GradVec xp = xi, xm = xi;
      xp(d) += h;
      xm(d) -= h;
      fd.col(d) = (flux::flux_vector(c, xp, eps) - flux::flux_vector(c, xm, eps)) / (2.0 * h);
    }
    worst_fd = std::max(worst_fd, (jac - fd).norm() / jac.norm());
  }
  CHECK(worst_sym <= 1e-12);
  CHECK(worst_fd <= 1e-5);
}

TEST_CASE("Jacobian spectrum reproduces the matrix") {
  const PointCoefficients c{1.7, 2.3, 0.6, 0.2};
  const GradVec xi = vec(0.8, -0.5);
  const auto sp = flux::flux_jacobian_spectrum(c, xi, 0.1);
  const GradVec n = xi.normalized();
  const flux::GradMat rebuilt =
      sp.tangential * (flux::GradMat::Identity(2, 2) - n * n.transpose()) + sp.normal * n * n.transpose();
  CHECK((rebuilt - flux::flux_jacobian(c, xi, 0.1)).norm() < 1e-13);
  CHECK(sp.tangential > 0.0);
  CHECK(sp.normal > 0.0);
}

TEST_CASE("monotonicity gap trivial cases") {
  const GradVec xi = vec(0.3, -1.1), eta = vec(-0.2, 0.4);
  CHECK(flux::monotonicity_gap(xi, xi, 2.7, 0.1) == 0.0);
  CHECK(flux::monotonicity_gap(xi, eta, 2.0, 0.37) == doctest::Approx((xi - eta).squaredNorm()).epsilon(1e-15));
}

TEST_CASE("monotonicity suite over 1e5 random samples") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> p_d(1.05, 4.0), eps_d(0.0, 1.0);
  int negative = 0, lower_branch = 0;
  for (int i = 0; i < 100000; ++i) {
    const double p = p_d(rng), eps = eps_d(rng);
    const GradVec xi = random_vec(rng, 2.0), eta = random_vec(rng, 2.0);
    const double s = flux::monotonicity_gap(xi, eta, p, eps);
    if (s < 0.0) ++negative;
    if (p >= 2.0) {
      const double gx = flux::gamma_eps(xi, p, eps), ge = flux::gamma_eps(eta, p, eps);
      if (s < 0.5 * (gx + ge) * (xi - eta).squaredNorm() * (1.0 - 1e-12)) ++lower_branch;
    }
  }
  CHECK(negative == 0);
  CHECK(lower_branch == 0);
}

TEST_CASE("|xi - eta|^3 <= 2 C_3 S_3 at eps = 0, brute-force ratio") {
  CHECK(flux::monotonicity_constant(3.0) == 1.0);
  CHECK(flux::monotonicity_constant(5.0) == 4.0);
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const GradVec xi = random_vec(rng, 1.0), eta = random_vec(rng, 1.0);
    const double s = flux::monotonicity_gap(xi, eta, 3.0, 0.0);
    if (s > 0.0) worst = std::max(worst, std::pow((xi - eta).norm(), 3.0) / s);
  }
  CHECK(worst <= 2.0 * flux::monotonicity_constant(3.0));
}

TEST_CASE("log growth constant and inequality") {
  // Both branch suprema equal 1/(e mu).
  for (double mu : {0.1, 0.5, 1.0}) {
    CHECK(flux::log_growth_constant(mu, 2.0) == doctest::Approx(1.0 / (std::exp(1.0) * mu)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(flux::log_growth_constant(0.0, 1.0), DomainError);
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> lg(-6.0, 4.0), mu_d(0.05, 1.0), z_d(1.0, 3.0);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double mu = mu_d(rng), zeta = z_d(rng);
    const double s = std::pow(10.0, lg(rng));
    const double lhs = std::pow(s, zeta) * std::abs(std::log(s));
    if (lhs > flux::log_growth_constant(mu, zeta) * (1.0 + std::pow(s, zeta + mu)) * (1.0 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("evaluate bundles density, vector and energy") {
  const PointCoefficients c{2.2, 1.8, 0.5, 0.5};
  const GradVec xi = vec(1.0, 1.0);
  const auto ev = flux::evaluate(c, xi, {0.1, 0.0, 0.0});
  CHECK(ev.density == flux::flux_density(c, xi, {0.1, 0.0, 0.0}));
  CHECK((ev.vector - flux::flux_vector(c, xi, 0.1)).norm() == 0.0);
  CHECK(ev.energy == flux::energy_density(c, xi, 0.1));
}
