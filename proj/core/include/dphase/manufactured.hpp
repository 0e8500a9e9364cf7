#pragma once

#include <array>
#include <span>

#include "dphase/exponent_model.hpp"
#include "dphase/field.hpp"
#include "dphase/galerkin.hpp"

namespace dphase::mms {

/// Single-mode solution u(x,t) = A exp(-decay t) phi_k(x). Lies in every
/// Galerkin space containing mode k, so only time and quadrature errors remain.
struct ModeSolution {
  std::array<int, kMaxDim> mode{1, 1};
  int dim = 2;
  double amplitude = 1.0;
  double decay = 1.0;

  double time_factor(double t) const;
  double value(std::span<const double> x, double t) const;
  void gradient(std::span<const double> x, double t, std::span<double> grad) const;
  /// Row-major N x N Hessian.
  void hessian(std::span<const double> x, double t, std::span<double> hess) const;
  /// As a Field (sine_series family), e.g. for the initial datum.
  Field as_field() const;
};

/// Heat-equation decay rate pi^2 |k|^2 of a mode.
double eigenvalue(const ModeSolution& s);

/// f = u_t - div(F_eps(z, grad u) grad u) for the regularized equation,
/// evaluated pointwise from the analytic derivatives of u and of the data.
galerkin::SourceTerm manufactured_source(const ModeSolution& s, const exponent::ExponentData& data, double eps);

/// Exact L^2(Omega) distance between a Galerkin state and the solution at the
/// state's time (Parseval). Throws DomainError if the mode is not in the basis.
double l2_error(const galerkin::SpectralState& state, const galerkin::EigenBasis& basis, const ModeSolution& s);

}  // namespace dphase::mms
