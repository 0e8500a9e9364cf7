#include "dphase/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "dphase/diagnostics.hpp"
#include "dphase/errors.hpp"
#include "dphase/flux.hpp"

namespace dphase::studies {
namespace {

void require_common_times(const galerkin::Trajectory& a, const galerkin::Trajectory& b) {
  if (a.states.size() != b.states.size()) throw ConfigError("trajectories have different checkpoint counts");
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const double t = a.states[k].time;
    if (std::abs(t - b.states[k].time) > 1e-12 * std::max(1.0, std::abs(t))) {
      throw ConfigError("trajectories have different checkpoint times");
    }
  }
}

std::vector<galerkin::Trajectory> solve_members(std::size_t n, int workers,
                                                const std::function<galerkin::Trajectory(std::size_t)>& solve_one) {
  std::vector<galerkin::Trajectory> out(n);
  parallel_for(n, workers, [&](std::size_t i) { out[i] = solve_one(i); });
  return out;
}

std::string first_failure(const std::vector<galerkin::Trajectory>& members) {
  for (const auto& m : members) {
    if (!m.complete) return m.failure.empty() ? "incomplete trajectory" : m.failure;
  }
  return {};
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(w);
  std::mutex error_mutex;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

CauchyDistance cauchy_distance(const galerkin::Trajectory& ua, const galerkin::Trajectory& ub,
                               const exponent::ExponentData& data, double eps, int quad_order) {
  require_common_times(ua, ub);
  if (ua.basis->dim != ub.basis->dim) throw ConfigError("trajectories have different dimensions");
  const int dim = ua.basis->dim;
  const int order = quad_order > 0 ? quad_order : quad::default_order(std::max(ua.basis->m_per_dim, ub.basis->m_per_dim));
  const quad::QuadratureGrid grid(dim, order);
  const galerkin::BasisTables ta(*ua.basis, grid), tb(*ub.basis, grid);
  const std::size_t nodes = grid.size();

  std::vector<double> mod(ua.states.size()), pair(ua.states.size()), times(ua.states.size());
  std::vector<double> parts_m(nodes), parts_g(nodes);
  for (std::size_t k = 0; k < ua.states.size(); ++k) {
    const double t = ua.states[k].time;
    times[k] = t;
    Eigen::MatrixXd ga(static_cast<Eigen::Index>(nodes), dim), gb(static_cast<Eigen::Index>(nodes), dim);
    for (int d = 0; d < dim; ++d) {
      ga.col(d) = ta.gradient(d) * ua.states[k].coeffs;
      gb.col(d) = tb.gradient(d) * ub.states[k].coeffs;
    }
    for (std::size_t i = 0; i < nodes; ++i) {
      const auto c = data.at(grid.node(i), t);
      flux::GradVec xi(dim), eta(dim);
      for (int d = 0; d < dim; ++d) {
        xi[d] = ga(static_cast<Eigen::Index>(i), d);
        eta[d] = gb(static_cast<Eigen::Index>(i), d);
      }
      const double w = grid.weights()[i];
      const double diff = (xi - eta).norm();
      parts_m[i] = diff == 0.0 ? 0.0 : w * std::pow(diff, std::min(c.p, c.q));
      parts_g[i] = w * (flux::flux_vector(c, xi, eps) - flux::flux_vector(c, eta, eps)).dot(xi - eta);
    }
    mod[k] = quad::pairwise_sum(parts_m);
    pair[k] = quad::pairwise_sum(parts_g);
  }
  return {diagnostics::time_integral(times, mod), diagnostics::time_integral(times, pair)};
}

bool decreasing_within(const std::vector<double>& values, double tolerance) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > (1.0 + tolerance) * values[k - 1]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

ContinuationReport continuation_from(std::vector<galerkin::Trajectory> members, const exponent::ExponentData& data,
                                     double tolerance, double ceiling) {
  ContinuationReport rep;
  rep.tolerance = tolerance;
  rep.ceiling = ceiling;
  rep.failure = first_failure(members);
  for (const auto& m : members) rep.eps.push_back(m.eps);
  for (std::size_t k = 0; k + 1 < members.size(); ++k) {
    if (!members[k].complete || !members[k + 1].complete) break;
    const auto cd = cauchy_distance(members[k], members[k + 1], data, members[k + 1].eps, 0);
    rep.d.push_back(cd.modular);
    rep.pairing.push_back(cd.pairing);
  }
  rep.monotone = decreasing_within(rep.d, tolerance);
  rep.below_ceiling = rep.d.empty() || rep.d.back() <= ceiling;
  rep.pairing_nonnegative = std::all_of(rep.pairing.begin(), rep.pairing.end(), [](double g) { return g >= -1e-10; });
  rep.members = std::move(members);
  return rep;
}

ContinuationReport eps_continuation_study(const galerkin::SolverConfig& cfg, const Problem& problem,
                                          const std::vector<double>& eps_seq, double tolerance, double ceiling,
                                          int workers) {
  for (std::size_t k = 1; k < eps_seq.size(); ++k) {
    if (!(eps_seq[k] < eps_seq[k - 1])) throw ConfigError("eps sequence must be strictly decreasing");
  }
  auto members = solve_members(eps_seq.size(), workers, [&](std::size_t i) {
    galerkin::SolverConfig c = cfg;
    c.eps = eps_seq[i];
    return galerkin::solve(c, problem.data, problem.u0, problem.source);
  });
  return continuation_from(std::move(members), problem.data, tolerance, ceiling);
}

RefinementReport refinement_from(std::vector<galerkin::Trajectory> members, const exponent::ExponentData& data,
                                 double tolerance) {
  RefinementReport rep;
  rep.tolerance = tolerance;
  rep.failure = first_failure(members);
  for (const auto& m : members) rep.m.push_back(m.basis->m_per_dim);
  for (std::size_t k = 0; k + 1 < members.size(); ++k) {
    if (!members[k].complete || !members[k + 1].complete) break;
    rep.d.push_back(cauchy_distance(members[k], members[k + 1], data, members[k].eps, 0).modular);
  }
  rep.monotone = decreasing_within(rep.d, tolerance);
  rep.members = std::move(members);
  return rep;
}

RefinementReport m_refinement_study(const galerkin::SolverConfig& cfg, const Problem& problem,
                                    const std::vector<int>& m_seq, double tolerance, int workers) {
  auto members = solve_members(m_seq.size(), workers, [&](std::size_t i) {
    galerkin::SolverConfig c = cfg;
    c.m_per_dim = m_seq[i];
    return galerkin::solve(c, problem.data, problem.u0, problem.source);
  });
  return refinement_from(std::move(members), problem.data, tolerance);
}

// ---------------------------------------------------------------------------

StabilityResult stability_from(const galerkin::Trajectory& u, const galerkin::Trajectory& v,
                               const exponent::ExponentData& data, const galerkin::SpaceFunction& u0,
                               const galerkin::SourceTerm& f, const galerkin::SpaceFunction& v0,
                               const galerkin::SourceTerm& g) {
  StabilityResult res;
  if (!u.complete || !v.complete) {
    res.failure = !u.complete ? u.failure : v.failure;
    return res;
  }
  require_common_times(u, v);
  if (u.basis->m_per_dim != v.basis->m_per_dim || u.basis->dim != v.basis->dim) {
    throw ConfigError("stability pair solved on different Galerkin spaces");
  }
  const quad::QuadratureGrid grid(u.basis->dim,
                                  u.quad_order > 0 ? u.quad_order : quad::default_order(u.basis->m_per_dim));
  std::vector<double> parts(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w0 = u0(grid.node(i)) - v0(grid.node(i));
    parts[i] = grid.weights()[i] * w0 * w0;
  }
  const double data_gap = quad::pairwise_sum(parts);
  std::vector<double> forcing(u.states.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < u.states.size(); ++k) {
    const double t = u.states[k].time;
    res.times.push_back(t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double df = f(grid.node(i), t) - g(grid.node(i), t);
      parts[i] = grid.weights()[i] * df * df;
    }
    forcing[k] = quad::pairwise_sum(parts);
    res.lhs.push_back((u.states[k].coeffs - v.states[k].coeffs).squaredNorm());
    scale = std::max({scale, u.states[k].coeffs.squaredNorm(), v.states[k].coeffs.squaredNorm()});
  }
  const double horizon = res.times.back() - res.times.front();
  res.rhs = std::exp(horizon) * (data_gap + diagnostics::time_integral(res.times, forcing));
  res.slack = 1e-6 * std::max(res.rhs, scale);
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (double l : res.lhs) {
    const double margin = res.rhs + res.slack - l;
    res.worst_margin = std::min(res.worst_margin, margin);
    if (margin < 0.0) ++res.violations;
  }
  res.grad_modular = cauchy_distance(u, v, data, u.eps, 0).modular;
  res.holds = res.violations == 0;
  return res;
}

StabilityResult stability_experiment(const galerkin::SolverConfig& cfg, const exponent::ExponentData& data,
                                     const galerkin::SpaceFunction& u0, const galerkin::SourceTerm& f,
                                     const galerkin::SpaceFunction& v0, const galerkin::SourceTerm& g) {
  const auto u = galerkin::solve(cfg, data, u0, f);
  const auto v = galerkin::solve(cfg, data, v0, g);
  return stability_from(u, v, data, u0, f, v0, g);
}

StabilitySweep stability_sweep(const galerkin::SolverConfig& cfg, const Problem& problem,
                               const std::vector<double>& deltas, const std::vector<int>& mode, int workers) {
  const auto basis = galerkin::build_basis(problem.data.space_dim, cfg.m_per_dim);
  const std::size_t j = basis.index_of(mode);
  if (j >= basis.size()) throw ConfigError("perturbation mode is not in the Galerkin basis");

  std::vector<galerkin::SpaceFunction> perturbed;
  for (double delta : deltas) {
    perturbed.push_back([u0 = problem.u0, delta, basis, j](std::span<const double> x) {
      return u0(x) + delta * basis.value(j, x);
    });
  }
  // Index 0 is the unperturbed run.
  auto members = solve_members(deltas.size() + 1, workers, [&](std::size_t i) {
    return galerkin::solve(cfg, problem.data, i == 0 ? problem.u0 : perturbed[i - 1], problem.source);
  });

  StabilitySweep sweep;
  sweep.deltas = deltas;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    sweep.results.push_back(stability_from(members[0], members[i + 1], problem.data, problem.u0, problem.source,
                                           perturbed[i], problem.source));
  }
  sweep.gronwall_holds = std::all_of(sweep.results.begin(), sweep.results.end(),
                                     [](const StabilityResult& r) { return r.failure.empty() && r.holds; });
  std::vector<double> mods;
  for (const auto& r : sweep.results) mods.push_back(r.grad_modular);
  sweep.modular_decreasing = true;
  for (std::size_t k = 1; k < mods.size(); ++k) {
    if (!(mods[k] < mods[k - 1]) && !(mods[k] == 0.0 && mods[k - 1] == 0.0)) sweep.modular_decreasing = false;
  }
  return sweep;
}

}  // namespace dphase::studies
