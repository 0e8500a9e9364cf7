#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dphase/exponent_model.hpp"
#include "dphase/galerkin.hpp"

namespace dphase::studies {

/// Data of one solve besides the solver settings.
struct Problem {
  exponent::ExponentData data;
  galerkin::SpaceFunction u0;
  galerkin::SourceTerm source;
};

/// Runs fn(0..n-1) on up to `workers` threads. Each index is handled exactly
/// once; callers store results by index so the outcome is order-independent.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// int_{Q_T} |grad(u_a - u_b)|^{s_(z)} and G_eps(grad u_a, grad u_b) on a common
/// Gauss-Legendre grid of order `quad_order`. Trajectories must share their
/// checkpoint times; otherwise ConfigError.
struct CauchyDistance {
  double modular = 0.0;
  double pairing = 0.0;
};
CauchyDistance cauchy_distance(const galerkin::Trajectory& ua, const galerkin::Trajectory& ub,
                               const exponent::ExponentData& data, double eps, int quad_order);

/// Sequence check: values[k+1] <= (1 + tolerance) values[k].
bool decreasing_within(const std::vector<double>& values, double tolerance);

struct ContinuationReport {
  std::vector<double> eps;
  std::vector<double> d;        ///< d_k between eps_k and eps_{k+1}
  std::vector<double> pairing;  ///< G_{eps_{k+1}}(grad u_k, grad u_{k+1})
  std::vector<galerkin::Trajectory> members;
  double tolerance = 0.1;
  double ceiling = std::numeric_limits<double>::infinity();
  bool monotone = false;
  bool below_ceiling = false;
  bool pairing_nonnegative = false;
  std::string failure;  ///< first member failure, if any

  bool passed() const { return failure.empty() && monotone && below_ceiling && pairing_nonnegative; }
  /// Finest-eps member, the surrogate of the degenerate solution.
  const galerkin::Trajectory& degenerate_surrogate() const { return members.back(); }
};

ContinuationReport eps_continuation_study(const galerkin::SolverConfig& cfg, const Problem& problem,
                                          const std::vector<double>& eps_seq, double tolerance = 0.1,
                                          double ceiling = std::numeric_limits<double>::infinity(),
                                          int workers = 1);
/// Same analysis for members solved elsewhere (ordered by decreasing eps).
ContinuationReport continuation_from(std::vector<galerkin::Trajectory> members, const exponent::ExponentData& data,
                                     double tolerance, double ceiling);

struct RefinementReport {
  std::vector<int> m;
  std::vector<double> d;  ///< int |grad(u^(m_k) - u^(m_{k+1}))|^{s_}
  std::vector<galerkin::Trajectory> members;
  double tolerance = 0.1;
  bool monotone = false;
  std::string failure;

  bool passed() const { return failure.empty() && monotone; }
};

RefinementReport m_refinement_study(const galerkin::SolverConfig& cfg, const Problem& problem,
                                    const std::vector<int>& m_seq, double tolerance = 0.1, int workers = 1);
RefinementReport refinement_from(std::vector<galerkin::Trajectory> members, const exponent::ExponentData& data,
                                 double tolerance);

/// One perturbed pair (u_0, f) vs (v_0, g) on identical grids.
struct StabilityResult {
  std::vector<double> times;
  std::vector<double> lhs;  ///< |(u - v)(t)|_2^2
  double rhs = 0.0;         ///< e^T (|u_0 - v_0|^2 + |f - g|^2_{2,Q_T})
  double slack = 0.0;
  double worst_margin = 0.0;
  double grad_modular = 0.0;  ///< int_{Q_T} |grad(u - v)|^{s_}
  int violations = 0;
  bool holds = false;
  std::string failure;
};

StabilityResult stability_experiment(const galerkin::SolverConfig& cfg, const exponent::ExponentData& data,
                                     const galerkin::SpaceFunction& u0, const galerkin::SourceTerm& f,
                                     const galerkin::SpaceFunction& v0, const galerkin::SourceTerm& g);
/// Comparison of two finished trajectories.
StabilityResult stability_from(const galerkin::Trajectory& u, const galerkin::Trajectory& v,
                               const exponent::ExponentData& data, const galerkin::SpaceFunction& u0,
                               const galerkin::SourceTerm& f, const galerkin::SpaceFunction& v0,
                               const galerkin::SourceTerm& g);

struct StabilitySweep {
  std::vector<double> deltas;
  std::vector<StabilityResult> results;
  bool gronwall_holds = false;
  bool modular_decreasing = false;

  bool passed() const { return gronwall_holds && modular_decreasing; }
};

/// v_0 = u_0 + delta * phi_mode, g = f, for each delta (decreasing).
StabilitySweep stability_sweep(const galerkin::SolverConfig& cfg, const Problem& problem,
                               const std::vector<double>& deltas, const std::vector<int>& mode, int workers = 1);

}  // namespace dphase::studies
