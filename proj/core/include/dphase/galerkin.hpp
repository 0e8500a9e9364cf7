#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dphase/exponent_model.hpp"
#include "dphase/quadrature.hpp"

namespace dphase::galerkin {

/// Function of space only, e.g. initial data.
using SpaceFunction = std::function<double(std::span<const double> x)>;
/// Function of space and time, e.g. the source term f(x, t).
using SourceTerm = std::function<double(std::span<const double> x, double t)>;

/// Dirichlet-Laplacian eigenpairs on (0,1)^N:
///   phi_k(x) = 2^{N/2} prod_i sin(k_i pi x_i),  lambda_k = pi^2 |k|^2,
/// for k in {1..m_per_dim}^N, sorted by eigenvalue then lexicographically.
struct EigenBasis {
  int dim = 2;
  int m_per_dim = 1;
  std::vector<std::array<int, kMaxDim>> modes;
  std::vector<double> eigenvalues;

  std::size_t size() const noexcept { return modes.size(); }
  /// Position of a mode in the sorted list, or size() if absent.
  std::size_t index_of(std::span<const int> mode) const;
  double value(std::size_t j, std::span<const double> x) const;
  void gradient(std::size_t j, std::span<const double> x, std::span<double> grad) const;
};

EigenBasis build_basis(int dim, int m_per_dim);

/// Galerkin coefficients u_j(t) against an EigenBasis.
struct SpectralState {
  double time = 0.0;
  Eigen::VectorXd coeffs;
};

/// Basis values and derivatives tabulated at arbitrary points
/// (rows = points, columns = modes).
class BasisTables {
 public:
  BasisTables(const EigenBasis& basis, std::span<const double> points, bool with_hessian = false);
  BasisTables(const EigenBasis& basis, const quad::QuadratureGrid& grid, bool with_hessian = false);

  std::size_t points() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  int dim() const noexcept { return dim_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Eigen::MatrixXd& gradient(int d) const { return grads_[d]; }
  /// Second derivative D_d D_e (symmetric storage).
  const Eigen::MatrixXd& hessian(int d, int e) const;
  bool has_hessian() const noexcept { return !hess_.empty(); }

 private:
  int dim_;
  Eigen::MatrixXd values_;
  std::vector<Eigen::MatrixXd> grads_;
  std::vector<Eigen::MatrixXd> hess_;  // (0,0), (0,1), (1,1)
};

/// Fast evaluation on a tensor lattice x_1-fastest, exploiting the separable
/// basis: u = S_1 C S_2^T with C the coefficient matrix.
class TensorEvaluator {
 public:
  TensorEvaluator(const EigenBasis& basis, std::vector<std::vector<double>> axis_points);

  struct Values {
    Eigen::VectorXd u;
    std::vector<Eigen::VectorXd> grad;  // per direction
  };
  Values evaluate(const Eigen::VectorXd& coeffs, bool with_gradient = true) const;
  std::size_t size() const noexcept;
  const std::vector<std::vector<double>>& axis_points() const noexcept { return axes_; }

 private:
  Eigen::MatrixXd coefficient_matrix(const Eigen::VectorXd& coeffs) const;

  const EigenBasis* basis_;
  std::vector<std::vector<double>> axes_;
  std::vector<Eigen::MatrixXd> sin_, dsin_;  // per axis: points x m_per_dim
};

struct SolverConfig {
  int m_per_dim = 8;
  double eps = 1e-2;
  double tau = 1e-3;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  int damping_halvings = 20;
  int tau_retries = 4;
  /// Gauss-Legendre order per dimension; 0 selects quad::default_order(m_per_dim).
  int quad_order = 0;
};

/// Per accepted step bookkeeping.
struct StepRecord {
  double t_end = 0.0;
  double tau = 0.0;
  int newton_iterations = 0;
  int substeps = 1;
  double residual_norm = 0.0;
  /// Phi(U_old) - Phi(U_new) for the proximal functional
  /// Phi(V) = |V - U|^2/(2 tau) + E_{t+tau}(V) - (f(t+tau), V); nonnegative up to roundoff.
  double proximal_decrease = 0.0;
};

struct Trajectory {
  std::shared_ptr<const EigenBasis> basis;
  double eps = 0.0;
  double tau = 0.0;
  int quad_order = 0;                 ///< Gauss-Legendre order of the solve
  std::vector<SpectralState> states;  ///< states[0] is the projected initial datum
  std::vector<StepRecord> steps;      ///< steps[k] produced states[k+1]
  bool complete = false;
  std::string failure;                ///< non-empty when the solve aborted

  std::vector<double> times() const;
};

/// The Galerkin system for fixed data, source and eps: assembly of the ODE
/// right-hand side, its Jacobian, and the implicit Euler step.
class GalerkinSystem {
 public:
  GalerkinSystem(std::shared_ptr<const EigenBasis> basis, exponent::ExponentData data, SourceTerm source,
                 double eps, int quad_order);

  const EigenBasis& basis() const noexcept { return *basis_; }
  std::shared_ptr<const EigenBasis> basis_ptr() const noexcept { return basis_; }
  const quad::QuadratureGrid& grid() const noexcept { return *grid_; }
  std::shared_ptr<const quad::QuadratureGrid> grid_ptr() const noexcept { return grid_; }
  const BasisTables& tables() const noexcept { return tables_; }
  const exponent::ExponentData& data() const noexcept { return data_; }
  double eps() const noexcept { return eps_; }

  /// (u_j)' = -int F_eps(z, grad u) grad u . grad phi_j + int f phi_j.
  Eigen::VectorXd rhs(const Eigen::VectorXd& coeffs, double t) const;
  /// Stiffness part d/dU of int F_eps grad u . grad phi_j.
  Eigen::MatrixXd stiffness_jacobian(const Eigen::VectorXd& coeffs, double t) const;
  /// int E_t(grad u) with E the convex energy density.
  double energy(const Eigen::VectorXd& coeffs, double t) const;
  /// (f(t), phi_j)_j.
  Eigen::VectorXd source_projection(double t) const;

  /// One implicit Euler step from `state` with step tau; throws StepFailure.
  SpectralState step_implicit(const SpectralState& state, double tau, const SolverConfig& cfg,
                              StepRecord* record = nullptr) const;

 private:
  struct Frozen;  // coefficients and source sampled at one time
  Frozen freeze(double t) const;
  Eigen::VectorXd flux_load(const Eigen::VectorXd& coeffs, const Frozen& fz) const;
  Eigen::MatrixXd assemble_stiffness(const Eigen::VectorXd& coeffs, const Frozen& fz) const;
  double energy(const Eigen::VectorXd& coeffs, const Frozen& fz) const;
  Eigen::MatrixXd gradients_at_nodes(const Eigen::VectorXd& coeffs) const;

  std::shared_ptr<const EigenBasis> basis_;
  std::shared_ptr<const quad::QuadratureGrid> grid_;
  BasisTables tables_;
  exponent::ExponentData data_;
  SourceTerm source_;
  double eps_;
};

/// u_j(0) = (u0, phi_j) by quadrature.
SpectralState project_initial(const SpaceFunction& u0, const EigenBasis& basis, const quad::QuadratureGrid& grid);

/// Free-function form of GalerkinSystem::rhs.
Eigen::VectorXd ode_rhs(const SpectralState& state, double t, double eps, const exponent::ExponentData& data,
                        const SourceTerm& source, const quad::QuadratureGrid& grid,
                        std::shared_ptr<const EigenBasis> basis);

/// Free-function form of GalerkinSystem::step_implicit.
SpectralState step_implicit(const SpectralState& state, double tau, const exponent::ExponentData& data,
                            const SourceTerm& source, const SolverConfig& cfg,
                            std::shared_ptr<const EigenBasis> basis);

/// Integrates the Galerkin system on [0, T] by implicit Euler. A failing step
/// is retried with tau halved up to cfg.tau_retries times; if it still fails,
/// the partial trajectory is returned with `failure` set.
Trajectory solve(const SolverConfig& cfg, const exponent::ExponentData& data, const SpaceFunction& u0,
                 const SourceTerm& source);

/// Exact evaluation of the sine series and its gradient at points in [0,1]^N
/// (flattened, N coordinates per point). Throws DomainError outside the box.
struct PointValues {
  std::vector<double> u;
  std::vector<double> grad;  ///< N entries per point
};
PointValues evaluate(const SpectralState& state, const EigenBasis& basis, std::span<const double> points);

/// Zero source.
SourceTerm zero_source();

}  // namespace dphase::galerkin
