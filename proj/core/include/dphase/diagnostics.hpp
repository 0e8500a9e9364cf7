#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dphase/exponent_model.hpp"
#include "dphase/galerkin.hpp"
#include "dphase/manufactured.hpp"
#include "dphase/quadrature.hpp"
#include "dphase/varexp_spaces.hpp"

namespace dphase::diagnostics {

/// Exact rows check an inequality whose constant is known; ceiling rows
/// compare a bounded quantity against a configured regression ceiling;
/// monitored rows only report a value.
enum class CheckKind { kExact, kCeiling, kMonitored };
enum class Verdict { kPass, kFail, kMonitor };

std::string to_string(CheckKind k);
std::string to_string(Verdict v);

struct CheckRow {
  std::string name;
  std::string anchor;  ///< label of the inequality, e.g. "eq:energy"
  CheckKind kind = CheckKind::kMonitored;
  Verdict verdict = Verdict::kMonitor;
  double value = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  /// bound - value for upper bounds; negative means violated.
  double margin = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

/// Builds a row for value <= bound (+ slack).
CheckRow upper_bound_row(std::string name, std::string anchor, CheckKind kind, double value, double bound,
                         double slack = 0.0, std::string note = {});
CheckRow monitored_row(std::string name, std::string anchor, double value, std::string note = {});

/// Per-checkpoint series written to timeseries.csv.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> l2_sq;            ///< |u(t)|_2^2
  std::vector<double> flux_energy_eps;  ///< int F_eps |grad u|^2
  std::vector<double> flux_energy_0;    ///< int F_0 |grad u|^2
  std::vector<double> grad_l2_sq;       ///< |grad u(t)|_2^2
  std::vector<double> energy_residual;  ///< absolute residual of the energy equality
  std::vector<double> ut_sq_accum;      ///< int_0^t |u_t|_2^2
  std::vector<double> linf;             ///< lattice maximum of |u(t)|
};

struct SecondOrderEntry {
  int i = 0;  ///< derivative direction, 1-based
  int j = 0;  ///< gradient component, 1-based
  double norm = 0.0;  ///< |D_i(sqrt(F_eps) D_j u)|_{2,Q_T}
};

struct Options {
  std::vector<double> sigma_grid{0.1, 0.3, 0.5};
  double energy_tolerance = 1e-2;
  double linf_slack = 1e-3;
  int linf_lattice = 65;
  double fd_h = 1.0 / 256.0;
  /// Number of checkpoints (evenly spread, ends included) used for the
  /// second-order norms.
  int second_order_samples = 11;
  bool second_order = true;
  double interpolation_beta = 1.0;
  double higher_integrability_ceiling = 1e6;
  double second_order_ceiling = 1e8;
  /// Optional exact solution and the tolerance on its final-time L^2 error.
  std::optional<mms::ModeSolution> exact;
  double mms_tolerance = 5e-3;
};

struct DiagnosticsReport {
  TimeSeries series;
  double energy_relative_residual = 0.0;  ///< max over checkpoints
  std::vector<double> sigma_grid;
  std::vector<double> higher_integrability;
  double second_order_h = 0.0;
  std::vector<SecondOrderEntry> second_order;
  std::vector<CheckRow> checks;

  /// True when no exact or ceiling row failed.
  bool passed() const;
  const CheckRow* find(const std::string& name) const;
};

/// Read-only view of a trajectory on a Gauss-Legendre grid: values,
/// gradients and data coefficients at the nodes for every checkpoint.
class TrajectoryView {
 public:
  /// quad_order == 0 selects the order of the solve, or quad::default_order(m_per_dim).
  TrajectoryView(const galerkin::Trajectory& traj, const exponent::ExponentData& data, int quad_order = 0,
                 bool with_hessian = false);

  const galerkin::Trajectory& trajectory() const noexcept { return *traj_; }
  const exponent::ExponentData& data() const noexcept { return *data_; }
  const quad::QuadratureGrid& grid() const noexcept { return *grid_; }
  std::shared_ptr<const quad::QuadratureGrid> grid_ptr() const noexcept { return grid_; }
  std::size_t checkpoints() const noexcept { return traj_->states.size(); }
  double time(std::size_t k) const { return traj_->states[k].time; }
  std::vector<double> times() const { return traj_->times(); }

  Eigen::VectorXd values(std::size_t k) const;
  /// nodes x N matrix of gradients.
  Eigen::MatrixXd gradients(std::size_t k) const;
  /// Squared Frobenius norm of the Hessian per node (requires with_hessian).
  Eigen::VectorXd hessian_sq(std::size_t k) const;
  const varexp::CoefficientSamples& coefficients(std::size_t k) const { return coef_[k]; }

  /// Space-time grid: spatial nodes x checkpoint times with trapezoid weights.
  std::shared_ptr<const quad::SpaceTimeGrid> space_time() const;
  /// Gradient as a space-time vector field.
  varexp::SampledField gradient_field() const;
  /// Coefficients at every space-time node (time-major).
  varexp::CoefficientSamples space_time_coefficients() const;

 private:
  const galerkin::Trajectory* traj_;
  const exponent::ExponentData* data_;
  std::shared_ptr<const quad::QuadratureGrid> grid_;
  galerkin::BasisTables tables_;
  std::vector<varexp::CoefficientSamples> coef_;
  mutable std::shared_ptr<const quad::SpaceTimeGrid> st_;
};

/// Integral over Q_T by trapezoid in time of per-checkpoint spatial integrals.
double time_integral(std::span<const double> times, std::span<const double> values);

struct EnergyResidual {
  std::vector<double> absolute;
  std::vector<double> relative;
  double max_relative = 0.0;
};
EnergyResidual energy_identity_residual(const TrajectoryView& view, const galerkin::SourceTerm& source);

struct AprioriReport {
  double lhs = 0.0;   ///< sup |u|^2 + int_{Q_T} F_eps |grad u|^2
  double rhs0 = 0.0;  ///< e^T (|f|^2_{2,Q_T} + |u_0|^2)
  double constant = 1.5;
  double ratio = 0.0;  ///< lhs / rhs0
  bool holds = false;
};
AprioriReport apriori_energy_bound(const TrajectoryView& view, const galerkin::SourceTerm& source);

/// int F_0 |grad u|^2 <= 2 int F_eps |grad u|^2 + int (a (2eps^2)^{p/2} + b (2eps^2)^{q/2}),
/// checked at every checkpoint; returns the smallest margin.
struct GradboundReport {
  double worst_margin = 0.0;
  double worst_time = 0.0;
  bool holds = false;
};
GradboundReport gradbound_check(const TrajectoryView& view);

/// int_{Q_T} |grad u|^{s_(z) + r_sharp - sigma} for each sigma; sigma must lie in (0, r_sharp).
std::vector<double> higher_integrability(const TrajectoryView& view, std::span<const double> sigma_grid);

struct InterpolationReport {
  double lhs = 0.0;             ///< alpha int |grad u|^{s_ + r_sharp - sigma}
  double second_order_term = 0.0;  ///< int F_eps |u_xx|^2
  double implied_constant = 0.0;   ///< max(0, lhs - beta * second_order_term)
};
/// Requires a view built with Hessians.
InterpolationReport interpolation_ratio(const TrajectoryView& view, double sigma, double beta);

struct TimeDerivativeReport {
  double ut_sq = 0.0;           ///< sum tau |u_t|^2
  double sup_energy = 0.0;      ///< sup_t int (a beta^{p/2} + b beta^{q/2})
  double lhs = 0.0;
  double rhs_core = 0.0;        ///< 1 + int F_0((x,0), grad u_0)|grad u_0|^2 + |f|^2_{2,Q_T}
  double ratio = 0.0;
};
TimeDerivativeReport time_derivative_bound(const TrajectoryView& view, const galerkin::SourceTerm& source);

struct SecondOrderReport {
  double h = 0.0;
  std::vector<SecondOrderEntry> entries;
  bool conditioning_warning = false;
};
/// Central differences of sqrt(F_eps) D_j u on the interior lattice {2h, ..., 1-2h}^N.
SecondOrderReport second_order_flux_norm(const galerkin::Trajectory& traj, const exponent::ExponentData& data,
                                         double h, int time_samples);

struct LinfReport {
  std::vector<double> envelope;  ///< lattice max |u(t_k)|
  std::vector<double> bound;     ///< |u_0|_inf + int_0^t |f|_inf
  double worst_margin = 0.0;
  bool holds = false;
};
LinfReport linf_bound_check(const galerkin::Trajectory& traj, const galerkin::SpaceFunction& u0,
                            const galerkin::SourceTerm& source, int lattice, double slack);

/// sup_t |grad u|_2^2 + int_{Q_T} F_eps |u_xx|^2 (requires Hessians).
double ineq0_quantity(const TrajectoryView& view);

/// Luxemburg norms of beta^{(p-2)/2} grad u and beta^{(q-2)/2} grad u in L^{s_upper'}(Q_T), summed.
double ineq_high1_quantity(const TrajectoryView& view);

/// Per accepted step: (|U'|^2 - |U|^2)/(2 tau) + int F_eps |grad u'|^2 <= int f u' + Newton slack.
struct StepEnergyReport {
  double worst_margin = 0.0;
  int steps_checked = 0;
  int steps_skipped = 0;  ///< macro steps split into substeps
  double min_proximal_decrease = 0.0;
  bool holds = false;
};
StepEnergyReport step_energy_check(const TrajectoryView& view, const galerkin::SourceTerm& source);

/// Every diagnostic of a single run, with the check table.
DiagnosticsReport run_diagnostics(const galerkin::Trajectory& traj, const exponent::ExponentData& data,
                                  const galerkin::SpaceFunction& u0, const galerkin::SourceTerm& source,
                                  const Options& options);

}  // namespace dphase::diagnostics
