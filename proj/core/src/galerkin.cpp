#include "dphase/galerkin.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dphase/errors.hpp"
#include "dphase/flux.hpp"

namespace dphase::galerkin {
namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

void check_in_box(std::span<const double> x) {
  for (double c : x) {
    if (!(c >= 0.0 && c <= 1.0)) throw DomainError("evaluation point outside [0,1]^N");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// EigenBasis

std::size_t EigenBasis::index_of(std::span<const int> mode) const {
  for (std::size_t j = 0; j < modes.size(); ++j) {
    bool same = static_cast<int>(mode.size()) == dim;
    for (int d = 0; same && d < dim; ++d) same = modes[j][d] == mode[d];
    if (same) return j;
  }
  return modes.size();
}

double EigenBasis::value(std::size_t j, std::span<const double> x) const {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= kSqrt2 * std::sin(modes[j][d] * kPi * x[d]);
  return v;
}

void EigenBasis::gradient(std::size_t j, std::span<const double> x, std::span<double> grad) const {
  for (int d = 0; d < dim; ++d) {
    double g = 1.0;
    for (int e = 0; e < dim; ++e) {
      const double k = modes[j][e] * kPi;
      g *= kSqrt2 * (e == d ? k * std::cos(k * x[e]) : std::sin(k * x[e]));
    }
    grad[d] = g;
  }
}

EigenBasis build_basis(int dim, int m_per_dim) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("basis dimension must be 1 or 2");
  if (m_per_dim < 1) throw DomainError("m_per_dim must be >= 1");
  EigenBasis basis;
  basis.dim = dim;
  basis.m_per_dim = m_per_dim;
  if (dim == 1) {
    for (int k = 1; k <= m_per_dim; ++k) basis.modes.push_back({k, 0});
  } else {
    for (int k1 = 1; k1 <= m_per_dim; ++k1) {
      for (int k2 = 1; k2 <= m_per_dim; ++k2) basis.modes.push_back({k1, k2});
    }
  }
  auto lambda = [dim](const std::array<int, kMaxDim>& k) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += static_cast<double>(k[d]) * k[d];
    return s;
  };
  // Modes are generated in lexicographic order; a stable sort keeps that as the tie-break.
  std::stable_sort(basis.modes.begin(), basis.modes.end(),
                   [&](const auto& l, const auto& r) { return lambda(l) < lambda(r); });
  basis.eigenvalues.reserve(basis.modes.size());
  for (const auto& k : basis.modes) basis.eigenvalues.push_back(kPi * kPi * lambda(k));
  return basis;
}

// ---------------------------------------------------------------------------
// BasisTables

BasisTables::BasisTables(const EigenBasis& basis, std::span<const double> points, bool with_hessian)
    : dim_(basis.dim) {
  const std::size_t n = points.size() / static_cast<std::size_t>(dim_);
  const auto m = static_cast<Eigen::Index>(basis.size());
  const int mp = basis.m_per_dim;
  values_.resize(static_cast<Eigen::Index>(n), m);
  grads_.assign(dim_, Eigen::MatrixXd(static_cast<Eigen::Index>(n), m));
  if (with_hessian) hess_.assign(dim_ == 1 ? 1 : 3, Eigen::MatrixXd(static_cast<Eigen::Index>(n), m));

  std::vector<double> s(static_cast<std::size_t>(dim_ * (mp + 1))), c(s.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = points.data() + i * dim_;
    for (int d = 0; d < dim_; ++d) {
      for (int k = 1; k <= mp; ++k) {
        s[d * (mp + 1) + k] = kSqrt2 * std::sin(k * kPi * x[d]);
        c[d * (mp + 1) + k] = kSqrt2 * k * kPi * std::cos(k * kPi * x[d]);
      }
    }
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& k = basis.modes[static_cast<std::size_t>(j)];
      if (dim_ == 1) {
        const double sv = s[k[0]], cv = c[k[0]];
        values_(row, j) = sv;
        grads_[0](row, j) = cv;
        if (with_hessian) hess_[0](row, j) = -std::pow(k[0] * kPi, 2) * sv;
      } else {
        const double s1 = s[k[0]], c1 = c[k[0]];
        const double s2 = s[(mp + 1) + k[1]], c2 = c[(mp + 1) + k[1]];
        values_(row, j) = s1 * s2;
        grads_[0](row, j) = c1 * s2;
        grads_[1](row, j) = s1 * c2;
        if (with_hessian) {
          hess_[0](row, j) = -std::pow(k[0] * kPi, 2) * s1 * s2;
          hess_[1](row, j) = c1 * c2;
          hess_[2](row, j) = -std::pow(k[1] * kPi, 2) * s1 * s2;
        }
      }
    }
  }
}

namespace {
std::vector<double> flatten_nodes(const quad::QuadratureGrid& grid) {
  std::vector<double> pts;
  pts.reserve(grid.size() * grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double x : grid.node(i)) pts.push_back(x);
  }
  return pts;
}
}  // namespace

BasisTables::BasisTables(const EigenBasis& basis, const quad::QuadratureGrid& grid, bool with_hessian)
    : BasisTables(basis, flatten_nodes(grid), with_hessian) {
  if (grid.dim() != basis.dim) throw DomainError("basis and grid dimensions differ");
}

const Eigen::MatrixXd& BasisTables::hessian(int d, int e) const {
  if (hess_.empty()) throw DomainError("BasisTables built without Hessians");
  if (dim_ == 1) return hess_[0];
  if (d > e) std::swap(d, e);
  return hess_[d + e];  // (0,0)->0, (0,1)->1, (1,1)->2
}

// ---------------------------------------------------------------------------
// TensorEvaluator

TensorEvaluator::TensorEvaluator(const EigenBasis& basis, std::vector<std::vector<double>> axis_points)
    : basis_(&basis), axes_(std::move(axis_points)) {
  if (static_cast<int>(axes_.size()) != basis.dim) throw DomainError("one point list per axis required");
  const int mp = basis.m_per_dim;
  for (const auto& pts : axes_) {
    Eigen::MatrixXd s(static_cast<Eigen::Index>(pts.size()), mp), ds(s.rows(), mp);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      check_in_box({&pts[i], 1});
      for (int k = 1; k <= mp; ++k) {
        s(static_cast<Eigen::Index>(i), k - 1) = kSqrt2 * std::sin(k * kPi * pts[i]);
        ds(static_cast<Eigen::Index>(i), k - 1) = kSqrt2 * k * kPi * std::cos(k * kPi * pts[i]);
      }
    }
    sin_.push_back(std::move(s));
    dsin_.push_back(std::move(ds));
  }
}

std::size_t TensorEvaluator::size() const noexcept {
  std::size_t n = 1;
  for (const auto& a : axes_) n *= a.size();
  return n;
}

Eigen::MatrixXd TensorEvaluator::coefficient_matrix(const Eigen::VectorXd& coeffs) const {
  const int mp = basis_->m_per_dim;
  Eigen::MatrixXd cm = Eigen::MatrixXd::Zero(mp, basis_->dim == 1 ? 1 : mp);
  for (std::size_t j = 0; j < basis_->size(); ++j) {
    const auto& k = basis_->modes[j];
    cm(k[0] - 1, basis_->dim == 1 ? 0 : k[1] - 1) = coeffs[static_cast<Eigen::Index>(j)];
  }
  return cm;
}

TensorEvaluator::Values TensorEvaluator::evaluate(const Eigen::VectorXd& coeffs, bool with_gradient) const {
  Values out;
  const Eigen::MatrixXd cm = coefficient_matrix(coeffs);
  if (basis_->dim == 1) {
    out.u = sin_[0] * cm.col(0);
    if (with_gradient) out.grad.push_back(dsin_[0] * cm.col(0));
    return out;
  }
  const Eigen::MatrixXd cs2 = cm * sin_[1].transpose();
  const Eigen::MatrixXd u = sin_[0] * cs2;
  out.u = Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
  if (with_gradient) {
    const Eigen::MatrixXd g1 = dsin_[0] * cs2;
    const Eigen::MatrixXd g2 = sin_[0] * (cm * dsin_[1].transpose());
    out.grad.emplace_back(Eigen::Map<const Eigen::VectorXd>(g1.data(), g1.size()));
    out.grad.emplace_back(Eigen::Map<const Eigen::VectorXd>(g2.data(), g2.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.time);
  return t;
}

// ---------------------------------------------------------------------------
// GalerkinSystem

struct GalerkinSystem::Frozen {
  double t = 0.0;
  std::vector<exponent::PointCoefficients> coef;
  Eigen::VectorXd source_load;
};

GalerkinSystem::GalerkinSystem(std::shared_ptr<const EigenBasis> basis, exponent::ExponentData data,
                               SourceTerm source, double eps, int quad_order)
    : basis_(std::move(basis)),
      grid_(std::make_shared<const quad::QuadratureGrid>(
          basis_->dim, quad_order > 0 ? quad_order : quad::default_order(basis_->m_per_dim))),
      tables_(*basis_, *grid_),
      data_(std::move(data)),
      source_(source ? std::move(source) : zero_source()),
      eps_(eps) {
  if (data_.space_dim != basis_->dim) throw DomainError("data and basis dimensions differ");
}

GalerkinSystem::Frozen GalerkinSystem::freeze(double t) const {
  Frozen fz;
  fz.t = t;
  fz.coef.resize(grid_->size());
  for (std::size_t i = 0; i < grid_->size(); ++i) fz.coef[i] = data_.at(grid_->node(i), t);
  fz.source_load = source_projection(t);
  return fz;
}

Eigen::VectorXd GalerkinSystem::source_projection(double t) const {
  Eigen::VectorXd wf(static_cast<Eigen::Index>(grid_->size()));
  for (std::size_t i = 0; i < grid_->size(); ++i) {
    wf[static_cast<Eigen::Index>(i)] = grid_->weights()[i] * source_(grid_->node(i), t);
  }
  return tables_.values().transpose() * wf;
}

Eigen::MatrixXd GalerkinSystem::gradients_at_nodes(const Eigen::VectorXd& coeffs) const {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(grid_->size()), basis_->dim);
  for (int d = 0; d < basis_->dim; ++d) g.col(d) = tables_.gradient(d) * coeffs;
  return g;
}

Eigen::VectorXd GalerkinSystem::flux_load(const Eigen::VectorXd& coeffs, const Frozen& fz) const {
  const Eigen::MatrixXd g = gradients_at_nodes(coeffs);
  const int dim = basis_->dim;
  Eigen::MatrixXd wflux(g.rows(), dim);
  flux::GradVec xi(dim);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (int d = 0; d < dim; ++d) xi[d] = g(i, d);
    const double f = flux::flux_density(fz.coef[static_cast<std::size_t>(i)], xi, {eps_, 0.0, 0.0});
    const double w = grid_->weights()[static_cast<std::size_t>(i)];
    for (int d = 0; d < dim; ++d) wflux(i, d) = w * f * xi[d];
  }
  Eigen::VectorXd load = tables_.gradient(0).transpose() * wflux.col(0);
  for (int d = 1; d < dim; ++d) load.noalias() += tables_.gradient(d).transpose() * wflux.col(d);
  return load;
}

Eigen::MatrixXd GalerkinSystem::assemble_stiffness(const Eigen::VectorXd& coeffs, const Frozen& fz) const {
  // K = sum_n w_n G_n^T J_n G_n = M^T M with M's node block sqrt(w_n) J_n^{1/2} G_n.
  const Eigen::MatrixXd g = gradients_at_nodes(coeffs);
  const int dim = basis_->dim;
  const Eigen::Index nodes = g.rows();
  const auto m = static_cast<Eigen::Index>(basis_->size());
  // scale(c, d) per node, stored as columns c*dim + d.
  Eigen::MatrixXd scale(nodes, dim * dim);
  flux::GradVec xi(dim);
  for (Eigen::Index i = 0; i < nodes; ++i) {
    for (int d = 0; d < dim; ++d) xi[d] = g(i, d);
    const auto spec = flux::flux_jacobian_spectrum(fz.coef[static_cast<std::size_t>(i)], xi, eps_);
    const double sw = std::sqrt(grid_->weights()[static_cast<std::size_t>(i)]);
    const double st = std::sqrt(spec.tangential), sn = std::sqrt(spec.normal);
    const double xi2 = xi.squaredNorm();
    for (int c = 0; c < dim; ++c) {
      for (int d = 0; d < dim; ++d) {
        double v = (c == d && dim > 1) ? st : 0.0;
        if (dim == 1) {
          v = sn;
        } else if (xi2 > 0.0) {
          v += (sn - st) * xi[c] * xi[d] / xi2;
        }
        scale(i, c * dim + d) = sw * v;
      }
    }
  }
  Eigen::MatrixXd mm(nodes * dim, m);
  for (int c = 0; c < dim; ++c) {
    auto block = mm.middleRows(c * nodes, nodes);
    block = scale.col(c * dim).asDiagonal() * tables_.gradient(0);
    for (int d = 1; d < dim; ++d) block += scale.col(c * dim + d).asDiagonal() * tables_.gradient(d);
  }
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
  k.selfadjointView<Eigen::Lower>().rankUpdate(mm.transpose());
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

double GalerkinSystem::energy(const Eigen::VectorXd& coeffs, const Frozen& fz) const {
  const Eigen::MatrixXd g = gradients_at_nodes(coeffs);
  const int dim = basis_->dim;
  std::vector<double> parts(static_cast<std::size_t>(g.rows()));
  flux::GradVec xi(dim);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (int d = 0; d < dim; ++d) xi[d] = g(i, d);
    parts[static_cast<std::size_t>(i)] = grid_->weights()[static_cast<std::size_t>(i)] *
                                         flux::energy_density(fz.coef[static_cast<std::size_t>(i)], xi, eps_);
  }
  return quad::pairwise_sum(parts);
}

Eigen::VectorXd GalerkinSystem::rhs(const Eigen::VectorXd& coeffs, double t) const {
  const Frozen fz = freeze(t);
  return fz.source_load - flux_load(coeffs, fz);
}

Eigen::MatrixXd GalerkinSystem::stiffness_jacobian(const Eigen::VectorXd& coeffs, double t) const {
  return assemble_stiffness(coeffs, freeze(t));
}

double GalerkinSystem::energy(const Eigen::VectorXd& coeffs, double t) const { return energy(coeffs, freeze(t)); }

SpectralState GalerkinSystem::step_implicit(const SpectralState& state, double tau, const SolverConfig& cfg,
                                            StepRecord* record) const {
  if (!(tau > 0.0)) throw DomainError("step_implicit requires tau > 0");
  if (!(eps_ > 0.0)) throw DomainError("step_implicit requires eps > 0");
  const double t1 = state.time + tau;
  const Frozen fz = freeze(t1);
  const Eigen::VectorXd& u = state.coeffs;
  const auto m = u.size();

  auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - u + tau * (flux_load(v, fz) - fz.source_load);
  };

  Eigen::VectorXd v = u;
  Eigen::VectorXd r = residual(v);
  double rn = r.norm();
  const double threshold = cfg.newton_tol * (1.0 + u.norm());
  std::vector<double> trace{rn};
  int iter = 0;
  for (; rn > threshold; ++iter) {
    if (iter >= cfg.newton_max_iter) {
      std::ostringstream os;
      os << "Newton did not converge in " << cfg.newton_max_iter << " iterations at t=" << t1
         << " (residual " << rn << ")";
      throw StepFailure(os.str(), t1, trace);
    }
    Eigen::MatrixXd jac = tau * assemble_stiffness(v, fz);
    jac.diagonal().array() += 1.0;
    const Eigen::VectorXd delta = jac.llt().solve(-r);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= cfg.damping_halvings; ++h, lambda *= 0.5) {
      Eigen::VectorXd trial = v + lambda * delta;
      Eigen::VectorXd rt = residual(trial);
      const double rtn = rt.norm();
      if (std::isfinite(rtn) && rtn < rn) {
        v = std::move(trial);
        r = std::move(rt);
        rn = rtn;
        accepted = true;
        break;
      }
    }
    trace.push_back(rn);
    if (!accepted) {
      std::ostringstream os;
      os << "damped Newton stalled at t=" << t1 << " (residual " << rn << ")";
      throw StepFailure(os.str(), t1, trace);
    }
  }

  if (record) {
    record->t_end = t1;
    record->tau = tau;
    record->newton_iterations = iter;
    record->residual_norm = rn;
    const double phi_old = energy(u, fz) - fz.source_load.dot(u);
    const double phi_new = (v - u).squaredNorm() / (2.0 * tau) + energy(v, fz) - fz.source_load.dot(v);
    record->proximal_decrease = phi_old - phi_new;
  }
  (void)m;
  return {t1, v};
}

// ---------------------------------------------------------------------------
// Free functions

SpectralState project_initial(const SpaceFunction& u0, const EigenBasis& basis, const quad::QuadratureGrid& grid) {
  if (!u0) throw ConfigError("initial datum is not evaluable");
  const BasisTables tables(basis, grid);
  Eigen::VectorXd wu(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = u0(grid.node(i));
    if (!std::isfinite(v)) throw ConfigError("initial datum is not finite at a quadrature node");
    wu[static_cast<Eigen::Index>(i)] = grid.weights()[i] * v;
  }
  return {0.0, tables.values().transpose() * wu};
}

Eigen::VectorXd ode_rhs(const SpectralState& state, double t, double eps, const exponent::ExponentData& data,
                        const SourceTerm& source, const quad::QuadratureGrid& grid,
                        std::shared_ptr<const EigenBasis> basis) {
  if (!(eps > 0.0)) throw DomainError("ode_rhs requires eps > 0");
  const GalerkinSystem sys(std::move(basis), data, source, eps, grid.order());
  return sys.rhs(state.coeffs, t);
}

SpectralState step_implicit(const SpectralState& state, double tau, const exponent::ExponentData& data,
                            const SourceTerm& source, const SolverConfig& cfg,
                            std::shared_ptr<const EigenBasis> basis) {
  const GalerkinSystem sys(std::move(basis), data, source, cfg.eps, cfg.quad_order);
  return sys.step_implicit(state, tau, cfg);
}

Trajectory solve(const SolverConfig& cfg, const exponent::ExponentData& data, const SpaceFunction& u0,
                 const SourceTerm& source) {
  exponent::validate(data);
  if (!(cfg.eps > 0.0) || !(cfg.eps < 1.0)) throw DomainError("solve requires eps in (0,1)");
  if (!(cfg.tau > 0.0)) throw DomainError("solve requires tau > 0");

  auto basis = std::make_shared<const EigenBasis>(build_basis(data.space_dim, cfg.m_per_dim));
  const GalerkinSystem sys(basis, data, source, cfg.eps, cfg.quad_order);

  const double horizon = data.horizon;
  const auto n_steps = std::max<long>(1, std::lround(horizon / cfg.tau));
  const double tau = horizon / static_cast<double>(n_steps);

  Trajectory traj;
  traj.basis = basis;
  traj.eps = cfg.eps;
  traj.tau = tau;
  traj.quad_order = sys.grid().order();
  traj.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.states.push_back(project_initial(u0, *basis, sys.grid()));

  for (long k = 0; k < n_steps; ++k) {
    const SpectralState& current = traj.states.back();
    const double t_target = horizon * static_cast<double>(k + 1) / static_cast<double>(n_steps);
    StepRecord rec;
    bool done = false;
    std::string last_error;
    for (int retry = 0; retry <= cfg.tau_retries && !done; ++retry) {
      const int substeps = 1 << retry;
      try {
        SpectralState s = current;
        int newton = 0;
        double decrease = 0.0;
        for (int sub = 0; sub < substeps; ++sub) {
          const double t_sub = current.time + (t_target - current.time) * (sub + 1) / substeps;
          StepRecord sub_rec;
          s = sys.step_implicit(s, t_sub - s.time, cfg, &sub_rec);
          newton += sub_rec.newton_iterations;
          decrease += sub_rec.proximal_decrease;
          rec.residual_norm = sub_rec.residual_norm;
        }
        s.time = t_target;
        rec.t_end = t_target;
        rec.tau = t_target - current.time;
        rec.substeps = substeps;
        rec.newton_iterations = newton;
        rec.proximal_decrease = decrease;
        traj.states.push_back(std::move(s));
        traj.steps.push_back(rec);
        done = true;
      } catch (const StepFailure& e) {
        last_error = e.what();
      }
    }
    if (!done) {
      traj.failure = last_error;
      return traj;
    }
  }
  traj.complete = true;
  return traj;
}

PointValues evaluate(const SpectralState& state, const EigenBasis& basis, std::span<const double> points) {
  const std::size_t dim = static_cast<std::size_t>(basis.dim);
  if (points.size() % dim != 0) throw DomainError("point list length is not a multiple of N");
  const std::size_t n = points.size() / dim;
  PointValues out;
  out.u.assign(n, 0.0);
  out.grad.assign(n * dim, 0.0);
  std::array<double, kMaxDim> g{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = points.subspan(i * dim, dim);
    check_in_box(x);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double c = state.coeffs[static_cast<Eigen::Index>(j)];
      if (c == 0.0) continue;
      out.u[i] += c * basis.value(j, x);
      basis.gradient(j, x, {g.data(), dim});
      for (std::size_t d = 0; d < dim; ++d) out.grad[i * dim + d] += c * g[d];
    }
  }
  return out;
}

SourceTerm zero_source() {
  return [](std::span<const double>, double) { return 0.0; };
}

}  // namespace dphase::galerkin
