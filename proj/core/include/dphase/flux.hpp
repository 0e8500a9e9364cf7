#pragma once

#include <Eigen/Core>
#include <span>

#include "dphase/exponent_model.hpp"

namespace dphase::flux {

using exponent::PointCoefficients;

/// Gradient-sized vector (N <= 2) without heap allocation.
using GradVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using GradMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Regularization eps in [0,1) and shifts (s1, s2) selecting F_eps^{(s1,s2)}.
struct FluxParams {
  double eps = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
};

struct FluxEval {
  double density = 0.0;  ///< F_eps^{(s1,s2)}(z, xi)
  GradVec vector;        ///< F_eps^{(0,0)}(z, xi) xi
  double energy = 0.0;   ///< (a/p) beta^{p/2} + (b/q) beta^{q/2}
};

/// eps^2 + |xi|^2.
double beta_eps(const GradVec& xi, double eps);

/// beta^{exponent/2}, with beta == 0 handled by continuity (0 for positive
/// exponents, 1 for zero); a negative exponent at beta == 0 throws
/// SingularityError.
double beta_power(double beta, double exponent);

/// gamma_eps^{(p)}(xi) = beta_eps(xi)^{(p-2)/2}.
double gamma_eps(const GradVec& xi, double p, double eps);

/// F_eps^{(s1,s2)}(z, xi) = a beta^{(p+s1-2)/2} + b beta^{(q+s2-2)/2}.
double flux_density(const PointCoefficients& c, const GradVec& xi, const FluxParams& params);

/// F_eps^{(0,0)}(z, xi) xi. At eps == 0 and xi == 0 the continuous extension 0 is returned.
GradVec flux_vector(const PointCoefficients& c, const GradVec& xi, double eps);

/// F_eps^{(0,0)}(z, xi) |xi|^2, extended by 0 at eps == 0, xi == 0.
double flux_work(const PointCoefficients& c, const GradVec& xi, double eps);

/// Convex potential of the flux: (a/p) beta^{p/2} + (b/q) beta^{q/2}.
double energy_density(const PointCoefficients& c, const GradVec& xi, double eps);

FluxEval evaluate(const PointCoefficients& c, const GradVec& xi, const FluxParams& params);

/// d(flux_vector)/d(xi) for eps > 0. Symmetric positive definite.
GradMat flux_jacobian(const PointCoefficients& c, const GradVec& xi, double eps);

/// The flux Jacobian has the form t (I - n n^T) + nu n n^T with n = xi/|xi|.
struct JacobianSpectrum {
  double tangential = 0.0;
  double normal = 0.0;
};
JacobianSpectrum flux_jacobian_spectrum(const PointCoefficients& c, const GradVec& xi, double eps);

/// S_p(xi, eta) = (gamma(xi) xi - gamma(eta) eta) . (xi - eta).
double monotonicity_gap(const GradVec& xi, const GradVec& eta, double p, double eps);

/// C_p with (s + r)^{p-2} <= C_p (s^{p-2} + r^{p-2}) for p >= 2, s, r >= 0,
/// so that |xi - eta|^p <= 2 C_p S_p(xi, eta).
double monotonicity_constant(double p);

/// Right-hand branch bound of the eps-interchange inequality:
///   a (2 eps^2)^{(p+s1)/2} + b (2 eps^2)^{(q+s2)/2}   if |xi| <= eps,
///   2 F_eps^{(s1,s2)} |xi|^2                          otherwise.
double null_eps_branch_bound(const PointCoefficients& c, const GradVec& xi, const FluxParams& params);

/// Constant C(mu, zeta) in |xi|^zeta |ln|xi|| <= C (1 + |xi|^{zeta+mu}),
/// found by numerically maximizing both branch factors.
double log_growth_constant(double mu, double zeta);

}  // namespace dphase::flux
