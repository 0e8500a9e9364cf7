#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dphase/exponent_model.hpp"
#include "dphase/flux.hpp"
#include "dphase/quadrature.hpp"

namespace dphase::varexp {

using exponent::PointCoefficients;

/// Values of a scalar (components == 1) or vector field at the nodes of a
/// discrete measure. Vector fields enter modulars through their Euclidean norm.
struct SampledField {
  std::shared_ptr<const quad::DiscreteMeasure> measure;
  int components = 1;
  std::vector<double> values;

  SampledField() = default;
  SampledField(std::shared_ptr<const quad::DiscreteMeasure> m, int comps, std::vector<double> v);

  std::size_t size() const noexcept { return measure ? measure->size() : 0; }
  /// |f(node)|.
  double magnitude(std::size_t node) const;
  flux::GradVec vector_at(std::size_t node) const;
  std::span<const double> weights() const { return measure->weights(); }
};

/// Samples of (p, q, a, b) aligned with the nodes of a measure.
using CoefficientSamples = std::vector<PointCoefficients>;

CoefficientSamples sample_coefficients(const quad::QuadratureGrid& grid, const exponent::ExponentData& data,
                                       double t);
CoefficientSamples sample_coefficients(const quad::SpaceTimeGrid& grid, const exponent::ExponentData& data);

/// Scalar field r(x) sampled on a spatial grid.
SampledField sample(const quad::QuadratureGrid& grid, const Field& field, double t);

/// A_r(f) = int |f|^{r}. Throws DomainError if r <= 1 at any node.
double modular(const SampledField& f, const SampledField& r);

/// Luxemburg norm inf{lambda > 0 : A_r(f / lambda) <= 1} by bisection.
double luxemburg_norm(const SampledField& f, const SampledField& r, double rel_tol = 1e-12);

/// Luxemburg norm of the constant 1 for an exponent that may be +infinity on
/// part of the nodes (L^infinity convention there).
double luxemburg_norm_of_one(const SampledField& r);

struct SandwichReport {
  double modular = 0.0;
  double norm = 0.0;
  double r_minus = 0.0;
  double r_plus = 0.0;
  double lower = 0.0;        ///< min{|f|^{r-}, |f|^{r+}}
  double upper = 0.0;        ///< max{|f|^{r-}, |f|^{r+}}
  double lower_slack = 0.0;  ///< modular - lower
  double upper_slack = 0.0;  ///< upper - modular
  bool holds = false;
};
SandwichReport check_modular_norm_sandwich(const SampledField& f, const SampledField& r);

struct HolderReport {
  double lhs = 0.0;  ///< int |f g|
  double norm_f = 0.0;
  double norm_g = 0.0;  ///< in the conjugate exponent r/(r-1)
  double rhs = 0.0;     ///< 2 |f|_r |g|_{r'}
  double slack = 0.0;
  bool holds = false;
};
HolderReport holder_pairing_check(const SampledField& f, const SampledField& g, const SampledField& r);

/// int (|u|^{s} + a0 |u|^{r} + b0 |u|^{sigma}) with s = max{2, min{p,q}},
/// r = max{2, p}, sigma = max{2, q}; coefficients taken at t = 0.
double musielak_modular(const SampledField& u, const CoefficientSamples& c0);

/// N(grad w) = int (a |grad w|^p + b |grad w|^q).
double composite_N(const SampledField& grad_w, const CoefficientSamples& c);

/// G_eps(grad u, grad v) = int (F_eps grad u - F_eps grad v) . grad(u - v).
double pairing_G_eps(const SampledField& grad_u, const SampledField& grad_v, double eps,
                     const CoefficientSamples& c);

/// Gradient embedding bound:
///   alpha int |grad u|^{s_} <= 4 (C_a + C_b)(A+ + B+)(N^{s-/s+} + N^{s+/s-}).
struct EmbeddingReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double c_a = 0.0, c_b = 0.0, a_plus = 0.0, b_plus = 0.0;
  double composite = 0.0;
  bool holds = false;
};
EmbeddingReport embedding_check(const SampledField& grad_u, const CoefficientSamples& c, double alpha);

/// Control of N(grad u - grad v) by G_eps(grad u, grad v):
///   N(grad u - grad v) <= C (G^{s+/2} + G^{s-/2} + G)
/// with C assembled from the explicit constants of the monotonicity chain:
/// on {p >= 2} via |xi - eta|^p <= 2 C_p S_p, on {p < 2} via the generalized
/// Holder inequality and S_p >= (p-1)|xi - eta|^2 (eps^2+|xi|^2+|eta|^2)^{(p-2)/2}.
struct MonotoneControlReport {
  double n_diff = 0.0;     ///< N(grad u - grad v)
  double g_eps = 0.0;      ///< G_eps(grad u, grad v)
  double chain_bound = 0.0;  ///< explicit chain evaluated with the actual intermediate integrals
  double constant = 0.0;   ///< C in the final power form
  double power_bound = 0.0;  ///< C (G^{s+/2} + G^{s-/2} + G)
  bool holds = false;
};
MonotoneControlReport monotone_control_check(const SampledField& grad_u, const SampledField& grad_v, double eps,
                                             const CoefficientSamples& c);

}  // namespace dphase::varexp
