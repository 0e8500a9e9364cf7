#include "dphase/flux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dphase/errors.hpp"

namespace dphase::flux {

double beta_eps(const GradVec& xi, double eps) { return eps * eps + xi.squaredNorm(); }

double beta_power(double beta, double exponent) {
  if (beta > 0.0) return std::exp(0.5 * exponent * std::log(beta));
  if (exponent > 0.0) return 0.0;
  if (exponent == 0.0) return 1.0;
  throw SingularityError("beta^(e/2) with beta = 0 and negative exponent");
}

double gamma_eps(const GradVec& xi, double p, double eps) { return beta_power(beta_eps(xi, eps), p - 2.0); }

double flux_density(const PointCoefficients& c, const GradVec& xi, const FluxParams& params) {
  const double beta = beta_eps(xi, params.eps);
  double value = 0.0;
  // A vanishing coefficient contributes nothing even where its power is singular.
  if (c.a != 0.0) value += c.a * beta_power(beta, c.p + params.s1 - 2.0);
  if (c.b != 0.0) value += c.b * beta_power(beta, c.q + params.s2 - 2.0);
  return value;
}

GradVec flux_vector(const PointCoefficients& c, const GradVec& xi, double eps) {
  const double beta = beta_eps(xi, eps);
  if (beta == 0.0) return GradVec::Zero(xi.size());
  return flux_density(c, xi, {eps, 0.0, 0.0}) * xi;
}

double flux_work(const PointCoefficients& c, const GradVec& xi, double eps) {
  const double beta = beta_eps(xi, eps);
  if (beta == 0.0) return 0.0;
  return flux_density(c, xi, {eps, 0.0, 0.0}) * xi.squaredNorm();
}

double energy_density(const PointCoefficients& c, const GradVec& xi, double eps) {
  const double beta = beta_eps(xi, eps);
  return c.a / c.p * beta_power(beta, c.p) + c.b / c.q * beta_power(beta, c.q);
}

FluxEval evaluate(const PointCoefficients& c, const GradVec& xi, const FluxParams& params) {
  FluxEval out;
  out.density = flux_density(c, xi, params);
  out.vector = flux_vector(c, xi, params.eps);
  out.energy = energy_density(c, xi, params.eps);
  return out;
}

JacobianSpectrum flux_jacobian_spectrum(const PointCoefficients& c, const GradVec& xi, double eps) {
  if (!(eps > 0.0)) throw DomainError("flux_jacobian requires eps > 0");
  const double beta = beta_eps(xi, eps);
  const double pa = c.a != 0.0 ? c.a * beta_power(beta, c.p - 2.0) : 0.0;
  const double qb = c.b != 0.0 ? c.b * beta_power(beta, c.q - 2.0) : 0.0;
  // Along xi: a beta^{(p-4)/2} (eps^2 + (p-1)|xi|^2) + same for b, q.
  const double xi2 = xi.squaredNorm();
  const double normal =
      pa * (eps * eps + (c.p - 1.0) * xi2) / beta + qb * (eps * eps + (c.q - 1.0) * xi2) / beta;
  return {pa + qb, normal};
}

GradMat flux_jacobian(const PointCoefficients& c, const GradVec& xi, double eps) {
  const auto spec = flux_jacobian_spectrum(c, xi, eps);
  const auto n = xi.size();
  GradMat jac = spec.tangential * GradMat::Identity(n, n);
  const double xi2 = xi.squaredNorm();
  if (xi2 > 0.0) jac += (spec.normal - spec.tangential) / xi2 * (xi * xi.transpose());
  return jac;
}

double monotonicity_gap(const GradVec& xi, const GradVec& eta, double p, double eps) {
  if (!(p > 1.0)) throw DomainError("monotonicity gap requires p > 1");
  auto scaled = [&](const GradVec& v) -> GradVec {
    const double beta = beta_eps(v, eps);
    if (beta == 0.0) return GradVec::Zero(v.size());
    return beta_power(beta, p - 2.0) * v;
  };
  return (scaled(xi) - scaled(eta)).dot(xi - eta);
}

double monotonicity_constant(double p) { return std::max(1.0, std::pow(2.0, p - 3.0)); }

double null_eps_branch_bound(const PointCoefficients& c, const GradVec& xi, const FluxParams& params) {
  const double norm = xi.norm();
  if (norm <= params.eps) {
    const double two_eps2 = 2.0 * params.eps * params.eps;
    return c.a * beta_power(two_eps2, c.p + params.s1) + c.b * beta_power(two_eps2, c.q + params.s2);
  }
  return 2.0 * flux_density(c, xi, params) * norm * norm;
}

double log_growth_constant(double mu, double zeta) {
  if (!(mu > 0.0) || !(mu < zeta)) throw DomainError("log_growth_constant requires 0 < mu < zeta");
  // Both branch factors s^{-mu} ln s (s >= 1) and s^{mu} |ln s| (s < 1) are
  // unimodal in ln s; golden-section search on ln s for each.
  auto maximize = [](auto&& g, double lo, double hi) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 200; ++it) {
      if (f1 < f2) {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + phi * (hi - lo); f2 = g(x2);
      } else {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - phi * (hi - lo); f1 = g(x1);
      }
    }
    return std::max(f1, f2);
  };
  const double span = 50.0 / mu;
  const double upper = maximize([mu](double l) { return std::exp(-mu * l) * l; }, 0.0, span);
  const double lower = maximize([mu](double l) { return std::exp(mu * l) * (-l); }, -span, 0.0);
  // s^{zeta-mu} <= 1 on s < 1, so each branch is bounded by its factor supremum.
  return std::max(upper, lower);
}

}  // namespace dphase::flux
