#include "dphase/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dphase/errors.hpp"
#include "dphase/flux.hpp"

namespace dphase::diagnostics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double raise(double base, double exponent) {
  if (base == 0.0) return exponent > 0.0 ? 0.0 : 1.0;
  return std::pow(base, exponent);
}

flux::GradVec row_vec(const Eigen::MatrixXd& g, Eigen::Index i) {
  flux::GradVec xi(g.cols());
  for (Eigen::Index d = 0; d < g.cols(); ++d) xi[d] = g(i, d);
  return xi;
}

// sum_i w_i term(i) over the spatial grid, pairwise reduced.
template <class Term>
double spatial_integral(const quad::QuadratureGrid& grid, Term&& term) {
  std::vector<double> parts(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) parts[i] = grid.weights()[i] * term(i);
  return quad::pairwise_sum(parts);
}

// Running trapezoid integral: out[k] = int_{t_0}^{t_k}.
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> v) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t k = 1; k < t.size(); ++k) out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (v[k] + v[k - 1]);
  return out;
}

double source_sq_integral(const TrajectoryView& view, const galerkin::SourceTerm& source) {
  std::vector<double> per(view.checkpoints());
  for (std::size_t k = 0; k < per.size(); ++k) {
    const double t = view.time(k);
    per[k] = spatial_integral(view.grid(), [&](std::size_t i) {
      const double f = source(view.grid().node(i), t);
      return f * f;
    });
  }
  const auto times = view.times();
  return time_integral(times, per);
}

std::vector<double> flux_work_series(const TrajectoryView& view, double eps) {
  std::vector<double> out(view.checkpoints());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::MatrixXd g = view.gradients(k);
    const auto& c = view.coefficients(k);
    out[k] = spatial_integral(view.grid(), [&](std::size_t i) {
      return flux::flux_work(c[i], row_vec(g, static_cast<Eigen::Index>(i)), eps);
    });
  }
  return out;
}

std::vector<double> source_pairing_series(const TrajectoryView& view, const galerkin::SourceTerm& source) {
  std::vector<double> out(view.checkpoints());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::VectorXd u = view.values(k);
    const double t = view.time(k);
    out[k] = spatial_integral(view.grid(), [&](std::size_t i) {
      return u[static_cast<Eigen::Index>(i)] * source(view.grid().node(i), t);
    });
  }
  return out;
}

std::vector<double> l2_series(const galerkin::Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.states.size());
  for (const auto& s : traj.states) out.push_back(s.coeffs.squaredNorm());
  return out;
}

std::vector<double> grad_l2_series(const galerkin::Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.states.size());
  const Eigen::Map<const Eigen::VectorXd> lambda(traj.basis->eigenvalues.data(),
                                                 static_cast<Eigen::Index>(traj.basis->eigenvalues.size()));
  for (const auto& s : traj.states) out.push_back((lambda.array() * s.coeffs.array().square()).sum());
  return out;
}

std::vector<double> uniform_axis(int points, double lo, double hi) {
  std::vector<double> x(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    x[static_cast<std::size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1.0);
  }
  return x;
}

// Lattice nodes (x_1 fastest) for a tensor axis list.
void lattice_node(const std::vector<std::vector<double>>& axes, std::size_t flat, std::span<double> x) {
  for (std::size_t d = 0; d < axes.size(); ++d) {
    const std::size_t n = axes[d].size();
    x[d] = axes[d][flat % n];
    flat /= n;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::kExact: return "exact";
    case CheckKind::kCeiling: return "ceiling";
    case CheckKind::kMonitored: return "monitored";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "PASS";
    case Verdict::kFail: return "FAIL";
    case Verdict::kMonitor: return "MONITOR";
  }
  return "?";
}

CheckRow upper_bound_row(std::string name, std::string anchor, CheckKind kind, double value, double bound,
                         double slack, std::string note) {
  CheckRow row;
  row.name = std::move(name);
  row.anchor = std::move(anchor);
  row.kind = kind;
  row.value = value;
  row.bound = bound;
  row.margin = bound - value;
  const bool ok = std::isfinite(value) && value <= bound + slack;
  row.verdict = ok ? Verdict::kPass : Verdict::kFail;
  row.note = std::move(note);
  return row;
}

CheckRow monitored_row(std::string name, std::string anchor, double value, std::string note) {
  CheckRow row;
  row.name = std::move(name);
  row.anchor = std::move(anchor);
  row.value = value;
  row.note = std::move(note);
  return row;
}

bool DiagnosticsReport::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckRow& r) { return r.verdict == Verdict::kFail; });
}

const CheckRow* DiagnosticsReport::find(const std::string& name) const {
  for (const auto& r : checks) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// TrajectoryView

TrajectoryView::TrajectoryView(const galerkin::Trajectory& traj, const exponent::ExponentData& data, int quad_order,
                               bool with_hessian)
    : traj_(&traj),
      data_(&data),
      grid_(std::make_shared<const quad::QuadratureGrid>(
          traj.basis->dim, quad_order > 0       ? quad_order
          : traj.quad_order > 0 ? traj.quad_order
                                : quad::default_order(traj.basis->m_per_dim))),
      tables_(*traj.basis, *grid_, with_hessian) {
  if (traj.states.empty()) throw DomainError("trajectory has no states");
  coef_.reserve(traj.states.size());
  for (const auto& s : traj.states) coef_.push_back(varexp::sample_coefficients(*grid_, data, s.time));
}

Eigen::VectorXd TrajectoryView::values(std::size_t k) const { return tables_.values() * traj_->states[k].coeffs; }

Eigen::MatrixXd TrajectoryView::gradients(std::size_t k) const {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(grid_->size()), tables_.dim());
  for (int d = 0; d < tables_.dim(); ++d) g.col(d) = tables_.gradient(d) * traj_->states[k].coeffs;
  return g;
}

Eigen::VectorXd TrajectoryView::hessian_sq(std::size_t k) const {
  const auto& c = traj_->states[k].coeffs;
  const int n = tables_.dim();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_->size()));
  for (int d = 0; d < n; ++d) {
    for (int e = d; e < n; ++e) {
      const Eigen::VectorXd h = tables_.hessian(d, e) * c;
      out += (d == e ? 1.0 : 2.0) * h.array().square().matrix();
    }
  }
  return out;
}

std::shared_ptr<const quad::SpaceTimeGrid> TrajectoryView::space_time() const {
  if (!st_) st_ = std::make_shared<const quad::SpaceTimeGrid>(grid_, times());
  return st_;
}

varexp::SampledField TrajectoryView::gradient_field() const {
  const int n = tables_.dim();
  std::vector<double> v;
  v.reserve(checkpoints() * grid_->size() * static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < checkpoints(); ++k) {
    const Eigen::MatrixXd g = gradients(k);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (int d = 0; d < n; ++d) v.push_back(g(i, d));
    }
  }
  return {space_time()->measure(), n, std::move(v)};
}

varexp::CoefficientSamples TrajectoryView::space_time_coefficients() const {
  varexp::CoefficientSamples out;
  out.reserve(checkpoints() * grid_->size());
  for (const auto& c : coef_) out.insert(out.end(), c.begin(), c.end());
  return out;
}

double time_integral(std::span<const double> times, std::span<const double> values) {
  const auto w = quad::trapezoid_weights(times);
  std::vector<double> parts(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) parts[k] = w[k] * values[k];
  return quad::pairwise_sum(parts);
}

// ---------------------------------------------------------------------------
// Energy identity and a-priori bounds

EnergyResidual energy_identity_residual(const TrajectoryView& view, const galerkin::SourceTerm& source) {
  const auto& traj = view.trajectory();
  const auto times = view.times();
  const auto l2 = l2_series(traj);
  const auto work = cumulative_trapezoid(times, flux_work_series(view, traj.eps));
  const auto pairing = cumulative_trapezoid(times, source_pairing_series(view, source));
  EnergyResidual out;
  out.absolute.resize(times.size());
  out.relative.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double lhs = 0.5 * l2[k] + work[k];
    const double rhs = 0.5 * l2[0] + pairing[k];
    out.absolute[k] = std::abs(lhs - rhs);
    const double scale = std::max({0.5 * l2[k], work[k], 0.5 * l2[0], std::abs(pairing[k])});
    out.relative[k] = scale > 0.0 ? out.absolute[k] / scale : 0.0;
    out.max_relative = std::max(out.max_relative, out.relative[k]);
  }
  return out;
}

AprioriReport apriori_energy_bound(const TrajectoryView& view, const galerkin::SourceTerm& source) {
  const auto& traj = view.trajectory();
  const auto times = view.times();
  const auto l2 = l2_series(traj);
  AprioriReport rep;
  const double work = time_integral(times, flux_work_series(view, traj.eps));
  rep.lhs = *std::max_element(l2.begin(), l2.end()) + work;
  const double horizon = times.back() - times.front();
  rep.rhs0 = std::exp(horizon) * (source_sq_integral(view, source) + l2[0]);
  rep.ratio = rep.rhs0 > 0.0 ? rep.lhs / rep.rhs0 : (rep.lhs > 0.0 ? kInf : 0.0);
  rep.holds = rep.lhs <= rep.constant * rep.rhs0 * (1.0 + 1e-12) + 1e-300;
  return rep;
}

GradboundReport gradbound_check(const TrajectoryView& view) {
  const double eps = view.trajectory().eps;
  GradboundReport rep;
  rep.worst_margin = kInf;
  for (std::size_t k = 0; k < view.checkpoints(); ++k) {
    const Eigen::MatrixXd g = view.gradients(k);
    const auto& c = view.coefficients(k);
    double f0 = 0.0, fe = 0.0, c3 = 0.0;
    f0 = spatial_integral(view.grid(), [&](std::size_t i) {
      return flux::flux_work(c[i], row_vec(g, static_cast<Eigen::Index>(i)), 0.0);
    });
    fe = spatial_integral(view.grid(), [&](std::size_t i) {
      return flux::flux_work(c[i], row_vec(g, static_cast<Eigen::Index>(i)), eps);
    });
    const double two_eps2 = 2.0 * eps * eps;
    c3 = spatial_integral(view.grid(), [&](std::size_t i) {
      return c[i].a * raise(two_eps2, c[i].p / 2.0) + c[i].b * raise(two_eps2, c[i].q / 2.0);
    });
    const double rhs = 2.0 * fe + c3;
    const double margin = rhs - f0 + 1e-12 * std::max(1.0, rhs);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_time = view.time(k);
    }
  }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

std::vector<double> higher_integrability(const TrajectoryView& view, std::span<const double> sigma_grid) {
  const double rs = exponent::r_sharp(view.data().space_dim);
  for (double s : sigma_grid) {
    if (!(s > 0.0 && s < rs)) throw DomainError("higher integrability requires sigma in (0, r_sharp)");
  }
  const auto times = view.times();
  std::vector<std::vector<double>> per(sigma_grid.size(), std::vector<double>(view.checkpoints()));
  for (std::size_t k = 0; k < view.checkpoints(); ++k) {
    const Eigen::MatrixXd g = view.gradients(k);
    const auto& c = view.coefficients(k);
    for (std::size_t s = 0; s < sigma_grid.size(); ++s) {
      per[s][k] = spatial_integral(view.grid(), [&](std::size_t i) {
        const double e = std::min(c[i].p, c[i].q) + rs - sigma_grid[s];
        return raise(g.row(static_cast<Eigen::Index>(i)).norm(), e);
      });
    }
  }
  std::vector<double> out;
  for (const auto& series : per) out.push_back(time_integral(times, series));
  return out;
}

namespace {
double second_order_term(const TrajectoryView& view) {
  const double eps = view.trajectory().eps;
  std::vector<double> per(view.checkpoints());
  for (std::size_t k = 0; k < view.checkpoints(); ++k) {
    const Eigen::MatrixXd g = view.gradients(k);
    const Eigen::VectorXd h2 = view.hessian_sq(k);
    const auto& c = view.coefficients(k);
    per[k] = spatial_integral(view.grid(), [&](std::size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      return flux::flux_density(c[i], row_vec(g, ii), {eps, 0.0, 0.0}) * h2[ii];
    });
  }
  const auto times = view.times();
  return time_integral(times, per);
}
}  // namespace

InterpolationReport interpolation_ratio(const TrajectoryView& view, double sigma, double beta) {
  InterpolationReport rep;
  const double hi = higher_integrability(view, std::span<const double>(&sigma, 1)).front();
  rep.lhs = view.data().alpha * hi;
  rep.second_order_term = second_order_term(view);
  rep.implied_constant = std::max(0.0, rep.lhs - beta * rep.second_order_term);
  return rep;
}

double ineq0_quantity(const TrajectoryView& view) {
  const auto g2 = grad_l2_series(view.trajectory());
  return *std::max_element(g2.begin(), g2.end()) + second_order_term(view);
}

double ineq_high1_quantity(const TrajectoryView& view) {
  const double eps = view.trajectory().eps;
  const int n = view.data().space_dim;
  const auto measure = view.space_time()->measure();
  std::vector<double> vp, vq, expo;
  vp.reserve(measure->size() * static_cast<std::size_t>(n));
  vq.reserve(vp.capacity());
  expo.reserve(measure->size());
  for (std::size_t k = 0; k < view.checkpoints(); ++k) {
    const Eigen::MatrixXd g = view.gradients(k);
    const auto& c = view.coefficients(k);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const auto xi = row_vec(g, i);
      const double beta = flux::beta_eps(xi, eps);
      const double fp = flux::beta_power(beta, c[static_cast<std::size_t>(i)].p - 2.0);
      const double fq = flux::beta_power(beta, c[static_cast<std::size_t>(i)].q - 2.0);
      for (int d = 0; d < n; ++d) {
        vp.push_back(fp * xi[d]);
        vq.push_back(fq * xi[d]);
      }
      const double su = std::max(c[static_cast<std::size_t>(i)].p, c[static_cast<std::size_t>(i)].q);
      expo.push_back(su / (su - 1.0));
    }
  }
  const varexp::SampledField r(measure, 1, std::move(expo));
  return varexp::luxemburg_norm(varexp::SampledField(measure, n, std::move(vp)), r) +
         varexp::luxemburg_norm(varexp::SampledField(measure, n, std::move(vq)), r);
}

TimeDerivativeReport time_derivative_bound(const TrajectoryView& view, const galerkin::SourceTerm& source) {
  const auto& traj = view.trajectory();
  const double eps = traj.eps;
  TimeDerivativeReport rep;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    const double dt = traj.states[k + 1].time - traj.states[k].time;
    rep.ut_sq += (traj.states[k + 1].coeffs - traj.states[k].coeffs).squaredNorm() / dt;
  }
  for (std::size_t k = 0; k < view.checkpoints(); ++k) {
    const Eigen::MatrixXd g = view.gradients(k);
    const auto& c = view.coefficients(k);
    const double e = spatial_integral(view.grid(), [&](std::size_t i) {
      const double beta = flux::beta_eps(row_vec(g, static_cast<Eigen::Index>(i)), eps);
      return c[i].a * flux::beta_power(beta, c[i].p) + c[i].b * flux::beta_power(beta, c[i].q);
    });
    rep.sup_energy = std::max(rep.sup_energy, e);
  }
  rep.lhs = rep.ut_sq + rep.sup_energy;
  const Eigen::MatrixXd g0 = view.gradients(0);
  const auto& c0 = view.coefficients(0);
  const double f0_work = spatial_integral(view.grid(), [&](std::size_t i) {
    return flux::flux_work(c0[i], row_vec(g0, static_cast<Eigen::Index>(i)), 0.0);
  });
  rep.rhs_core = 1.0 + f0_work + source_sq_integral(view, source);
  rep.ratio = rep.lhs / rep.rhs_core;
  return rep;
}

// ---------------------------------------------------------------------------
// Second-order flux norms

SecondOrderReport second_order_flux_norm(const galerkin::Trajectory& traj, const exponent::ExponentData& data,
                                         double h, int time_samples) {
  if (!(h > 0.0 && h <= 0.125)) throw DomainError("second-order lattice spacing must lie in (0, 1/8]");
  const long n = std::lround(1.0 / h);
  if (std::abs(n * h - 1.0) > 1e-9) throw DomainError("second-order lattice spacing must divide 1");
  const auto& basis = *traj.basis;
  const int dim = basis.dim;
  SecondOrderReport rep;
  rep.h = h;
  rep.conditioning_warning = h * std::numbers::pi * basis.m_per_dim < 1e-3;

  // Composite evaluated on x = h, ..., 1 - h; differences taken on 2h, ..., 1 - 2h.
  const int pts = static_cast<int>(n) - 1;
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(dim), uniform_axis(pts, h, 1.0 - h));
  const galerkin::TensorEvaluator eval(basis, axes);
  const std::size_t total = eval.size();

  const std::size_t kcount = traj.states.size();
  std::vector<std::size_t> picks;
  const int samples = std::max(1, std::min<int>(time_samples, static_cast<int>(kcount)));
  for (int s = 0; s < samples; ++s) {
    const std::size_t k = samples == 1 ? kcount - 1
                                       : static_cast<std::size_t>(std::lround(
                                             static_cast<double>(s) * (kcount - 1) / (samples - 1.0)));
    if (picks.empty() || picks.back() != k) picks.push_back(k);
  }

  const int nij = dim * dim;
  std::vector<std::vector<double>> per(static_cast<std::size_t>(nij), std::vector<double>(picks.size(), 0.0));
  std::vector<double> times;
  std::vector<double> comp(total * static_cast<std::size_t>(dim));
  std::array<double, kMaxDim> x{};
  const double cell = std::pow(h, dim);
  for (std::size_t s = 0; s < picks.size(); ++s) {
    const auto& state = traj.states[picks[s]];
    times.push_back(state.time);
    const auto v = eval.evaluate(state.coeffs, true);
    for (std::size_t node = 0; node < total; ++node) {
      lattice_node(axes, node, {x.data(), static_cast<std::size_t>(dim)});
      const auto c = data.at({x.data(), static_cast<std::size_t>(dim)}, state.time);
      flux::GradVec xi(dim);
      for (int d = 0; d < dim; ++d) xi[d] = v.grad[static_cast<std::size_t>(d)][static_cast<Eigen::Index>(node)];
      const double sf = std::sqrt(flux::flux_density(c, xi, {traj.eps, 0.0, 0.0}));
      for (int d = 0; d < dim; ++d) comp[node * dim + d] = sf * xi[d];
    }
    // Interior index range [1, pts - 2] along every axis.
    const std::size_t stride1 = static_cast<std::size_t>(pts);
    for (int i = 0; i < dim; ++i) {
      const std::size_t step = i == 0 ? 1 : stride1;
      for (int j = 0; j < dim; ++j) {
        std::vector<double> parts;
        for (std::size_t node = 0; node < total; ++node) {
          const std::size_t i0 = node % stride1;
          const std::size_t i1 = dim == 2 ? node / stride1 : 1;
          if (i0 < 1 || i0 + 2 > stride1 || (dim == 2 && (i1 < 1 || i1 + 2 > stride1))) continue;
          const double diff = (comp[(node + step) * dim + j] - comp[(node - step) * dim + j]) / (2.0 * h);
          parts.push_back(cell * diff * diff);
        }
        per[static_cast<std::size_t>(i * dim + j)][s] = quad::pairwise_sum(parts);
      }
    }
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const double sq = picks.size() > 1 ? time_integral(times, per[static_cast<std::size_t>(i * dim + j)]) : 0.0;
      rep.entries.push_back({i + 1, j + 1, std::sqrt(sq)});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// L-infinity envelope

LinfReport linf_bound_check(const galerkin::Trajectory& traj, const galerkin::SpaceFunction& u0,
                            const galerkin::SourceTerm& source, int lattice, double slack) {
  if (lattice < 2) throw DomainError("L-infinity lattice needs at least 2 points per axis");
  const int dim = traj.basis->dim;
  const std::vector<std::vector<double>> axes(static_cast<std::size_t>(dim), uniform_axis(lattice, 0.0, 1.0));
  const galerkin::TensorEvaluator eval(*traj.basis, axes);

  auto lattice_sup = [&](const std::vector<std::vector<double>>& ax, auto&& fn) {
    std::size_t total = 1;
    for (const auto& a : ax) total *= a.size();
    std::array<double, kMaxDim> x{};
    double m = 0.0;
    for (std::size_t node = 0; node < total; ++node) {
      lattice_node(ax, node, {x.data(), static_cast<std::size_t>(dim)});
      m = std::max(m, std::abs(fn(std::span<const double>(x.data(), static_cast<std::size_t>(dim)))));
    }
    return m;
  };

  // The datum's sup is taken on a 4x finer lattice so it is not underestimated.
  const std::vector<std::vector<double>> fine(static_cast<std::size_t>(dim),
                                              uniform_axis(4 * (lattice - 1) + 1, 0.0, 1.0));
  const double u0_sup = lattice_sup(fine, [&](std::span<const double> x) { return u0(x); });

  LinfReport rep;
  std::vector<double> f_sup, times;
  for (const auto& s : traj.states) {
    const auto v = eval.evaluate(s.coeffs, false);
    rep.envelope.push_back(v.u.cwiseAbs().maxCoeff());
    times.push_back(s.time);
    f_sup.push_back(lattice_sup(axes, [&](std::span<const double> x) { return source(x, s.time); }));
  }
  const auto forcing = cumulative_trapezoid(times, f_sup);
  rep.worst_margin = kInf;
  for (std::size_t k = 0; k < times.size(); ++k) {
    rep.bound.push_back(u0_sup + forcing[k]);
    rep.worst_margin = std::min(rep.worst_margin, rep.bound[k] + slack - rep.envelope[k]);
  }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Per-step energy inequality

StepEnergyReport step_energy_check(const TrajectoryView& view, const galerkin::SourceTerm& source) {
  const auto& traj = view.trajectory();
  const auto l2 = l2_series(traj);
  const auto work = flux_work_series(view, traj.eps);
  const auto pairing = source_pairing_series(view, source);
  StepEnergyReport rep;
  rep.worst_margin = kInf;
  rep.min_proximal_decrease = kInf;
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const auto& step = traj.steps[k];
    if (step.substeps != 1) {
      ++rep.steps_skipped;
      continue;
    }
    const double tau = traj.states[k + 1].time - traj.states[k].time;
    const double lhs = (l2[k + 1] - l2[k]) / (2.0 * tau) + work[k + 1];
    const double rhs = pairing[k + 1];
    const double slack = step.residual_norm * std::sqrt(l2[k + 1]) / tau +
                         1e-10 * std::max({1.0, std::abs(lhs), std::abs(rhs), l2[k + 1] / tau});
    rep.worst_margin = std::min(rep.worst_margin, rhs + slack - lhs);
    rep.min_proximal_decrease = std::min(rep.min_proximal_decrease, step.proximal_decrease);
    ++rep.steps_checked;
  }
  if (rep.steps_checked == 0) {
    rep.worst_margin = 0.0;
    rep.min_proximal_decrease = 0.0;
  }
  rep.holds = rep.worst_margin >= 0.0 && rep.min_proximal_decrease >= -1e-10 * std::max(1.0, l2.front());
  return rep;
}

// ---------------------------------------------------------------------------

DiagnosticsReport run_diagnostics(const galerkin::Trajectory& traj, const exponent::ExponentData& data,
                                  const galerkin::SpaceFunction& u0, const galerkin::SourceTerm& source,
                                  const Options& options) {
  const TrajectoryView view(traj, data, 0, true);
  DiagnosticsReport rep;
  auto& ts = rep.series;
  ts.t = view.times();
  ts.l2_sq = l2_series(traj);
  ts.flux_energy_eps = flux_work_series(view, traj.eps);
  ts.flux_energy_0 = flux_work_series(view, 0.0);
  ts.grad_l2_sq = grad_l2_series(traj);

  const auto energy = energy_identity_residual(view, source);
  ts.energy_residual = energy.absolute;
  rep.energy_relative_residual = energy.max_relative;
  ts.ut_sq_accum.assign(ts.t.size(), 0.0);
  for (std::size_t k = 1; k < ts.t.size(); ++k) {
    ts.ut_sq_accum[k] = ts.ut_sq_accum[k - 1] +
                        (traj.states[k].coeffs - traj.states[k - 1].coeffs).squaredNorm() / (ts.t[k] - ts.t[k - 1]);
  }
  const auto linf = linf_bound_check(traj, u0, source, options.linf_lattice, options.linf_slack);
  ts.linf = linf.envelope;

  auto& rows = rep.checks;
  rows.push_back(upper_bound_row("energy equality relative residual", "eq:energy", CheckKind::kExact,
                                 energy.max_relative, options.energy_tolerance));

  const auto apriori = apriori_energy_bound(view, source);
  rows.push_back(upper_bound_row("a-priori energy bound", "secderiboun", CheckKind::kExact, apriori.lhs,
                                 apriori.constant * apriori.rhs0, 1e-12 * std::max(1.0, apriori.rhs0),
                                 "C1 = 1.5, ratio lhs/(e^T data) = " + fmt(apriori.ratio)));

  const auto grad = gradbound_check(view);
  {
    CheckRow row = monitored_row("null-eps gradient bound", "gradbound", grad.worst_margin,
                                 "C2 = 2, worst t = " + fmt(grad.worst_time));
    row.kind = CheckKind::kExact;
    row.bound = 0.0;
    row.margin = grad.worst_margin;
    row.verdict = grad.holds ? Verdict::kPass : Verdict::kFail;
    rows.push_back(row);
  }

  const auto step = step_energy_check(view, source);
  {
    CheckRow row = monitored_row("per-step energy inequality", "est01", step.worst_margin,
                                 std::to_string(step.steps_checked) + " steps checked, " +
                                     std::to_string(step.steps_skipped) + " substepped; min proximal decrease " +
                                     fmt(step.min_proximal_decrease));
    row.kind = CheckKind::kExact;
    row.bound = 0.0;
    row.margin = step.worst_margin;
    row.verdict = step.holds ? Verdict::kPass : Verdict::kFail;
    rows.push_back(row);
  }

  double max_residual = 0.0;
  for (const auto& s : traj.steps) max_residual = std::max(max_residual, s.residual_norm);
  rows.push_back(monitored_row("Galerkin residual (max Newton residual)", "eq:def-reg", max_residual));

  rep.sigma_grid = options.sigma_grid;
  rep.higher_integrability = higher_integrability(view, options.sigma_grid);
  for (std::size_t s = 0; s < rep.sigma_grid.size(); ++s) {
    rows.push_back(upper_bound_row("higher integrability sigma=" + fmt(rep.sigma_grid[s]), "eq:strong-est",
                                   CheckKind::kCeiling, rep.higher_integrability[s],
                                   options.higher_integrability_ceiling));
  }
  const double hess_term = second_order_term(view);
  for (std::size_t s = 0; s < rep.sigma_grid.size(); ++s) {
    const double lhs = data.alpha * rep.higher_integrability[s];
    rows.push_back(monitored_row("interpolation implied constant sigma=" + fmt(rep.sigma_grid[s]),
                                 "eq:principal-3", std::max(0.0, lhs - options.interpolation_beta * hess_term),
                                 "beta = " + fmt(options.interpolation_beta)));
  }

  const auto td = time_derivative_bound(view, source);
  {
    CheckRow row = monitored_row("time derivative ratio", "timederiest", td.ratio,
                                 "lhs = " + fmt(td.lhs) + ", core rhs = " + fmt(td.rhs_core));
    if (!std::isfinite(td.ratio)) {
      row.kind = CheckKind::kExact;
      row.verdict = Verdict::kFail;
    }
    rows.push_back(row);
  }
  rows.push_back(monitored_row("sup |grad u|^2 + int F_eps |u_xx|^2", "eq:ineq-0", ineq0_quantity(view)));
  rows.push_back(monitored_row("flux Luxemburg norms in L^{s_upper'}", "eq:ineq-high-1", ineq_high1_quantity(view)));

  {
    const auto emb = varexp::embedding_check(view.gradient_field(), view.space_time_coefficients(), data.alpha);
    rows.push_back(upper_bound_row("gradient embedding", "Lemma 3.3", CheckKind::kExact, emb.lhs, emb.rhs,
                                   1e-10 * std::max(1.0, emb.rhs)));
  }

  if (options.second_order) {
    const auto so = second_order_flux_norm(traj, data, options.fd_h, options.second_order_samples);
    rep.second_order_h = so.h;
    rep.second_order = so.entries;
    double worst = 0.0;
    for (const auto& e : so.entries) worst = std::max(worst, e.norm);
    rows.push_back(upper_bound_row("second-order flux norm (max over i,j)", "Thm 2.4(2)", CheckKind::kCeiling, worst,
                                   options.second_order_ceiling, 0.0,
                                   so.conditioning_warning ? "h is small relative to the spectral resolution" : ""));
  }

  {
    CheckRow row = monitored_row("L-infinity envelope", "est:bdd", linf.worst_margin, "margin incl. slack");
    row.kind = CheckKind::kExact;
    row.bound = 0.0;
    row.margin = linf.worst_margin;
    row.verdict = linf.holds ? Verdict::kPass : Verdict::kFail;
    rows.push_back(row);
  }

  {
    // Initial datum in W^{1,H}_0: Musielak modular of u_0 and |grad u_0| finite.
    const auto measure = quad::spatial_measure(view.grid());
    const Eigen::VectorXd u = view.values(0);
    const Eigen::MatrixXd g = view.gradients(0);
    std::vector<double> uv(u.data(), u.data() + u.size()), gv;
    for (Eigen::Index i = 0; i < g.rows(); ++i) gv.push_back(g.row(i).norm());
    const double rho = varexp::musielak_modular(varexp::SampledField(measure, 1, uv), view.coefficients(0)) +
                       varexp::musielak_modular(varexp::SampledField(measure, 1, gv), view.coefficients(0));
    rows.push_back(monitored_row("Musielak modular of u_0 and |grad u_0|", "eq:ini", rho));
  }

  if (options.exact) {
    const double err = mms::l2_error(traj.states.back(), *traj.basis, *options.exact);
    rows.push_back(upper_bound_row("final-time L2 error vs exact solution", "Theorem 7.1", CheckKind::kExact, err,
                                   options.mms_tolerance));
  }
  return rep;
}

}  // namespace dphase::diagnostics
