#include "dphase/exponent_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "dphase/errors.hpp"

namespace dphase::exponent {
namespace {

struct ProbeLattice {
  int dim;
  int nx;
  int nt;
  double horizon;

  std::size_t size() const {
    std::size_t n = static_cast<std::size_t>(nt);
    for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(nx);
    return n;
  }
  // Node index layout: time slowest, then x_N ... x_1 fastest.
  void node(std::size_t idx, std::array<double, kMaxDim>& x, double& t) const {
    for (int d = 0; d < dim; ++d) {
      x[d] = static_cast<double>(idx % nx) / (nx - 1);
      idx /= nx;
    }
    t = horizon * static_cast<double>(idx) / (nt - 1);
  }
  std::size_t stride(int axis) const {  // axis == dim means time
    std::size_t s = 1;
    for (int d = 0; d < axis; ++d) s *= static_cast<std::size_t>(nx);
    return s;
  }
};

std::vector<double> node_vector(const std::array<double, kMaxDim>& x, double t, int dim) {
  std::vector<double> v(x.begin(), x.begin() + dim);
  v.push_back(t);
  return v;
}

// Largest finite-difference slope between lattice neighbours.
double lipschitz_estimate(const std::vector<double>& values, const ProbeLattice& lat) {
  double lip = 0.0;
  for (int axis = 0; axis <= lat.dim; ++axis) {
    const std::size_t stride = lat.stride(axis);
    const int extent = axis == lat.dim ? lat.nt : lat.nx;
    const double h = axis == lat.dim ? lat.horizon / (lat.nt - 1) : 1.0 / (lat.nx - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::size_t coord = (i / stride) % static_cast<std::size_t>(extent);
      if (coord + 1 >= static_cast<std::size_t>(extent)) continue;
      lip = std::max(lip, std::abs(values[i + stride] - values[i]) / h);
    }
  }
  return lip;
}

}  // namespace

bool ValidationReport::passed() const { return first_failure() == nullptr; }

const ConditionCheck* ValidationReport::first_failure() const {
  for (const auto& c : conditions) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

ValidationReport check(const ExponentData& data) {
  if (data.space_dim < 1 || data.space_dim > kMaxDim) {
    throw ConfigError("dim must be 1 or 2, got " + std::to_string(data.space_dim));
  }
  if (!(data.horizon > 0.0) || !std::isfinite(data.horizon)) throw ConfigError("horizon must be positive");
  if (!(data.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (data.lipschitz_probe_resolution < 2 || data.time_probe_resolution < 2) {
    throw ConfigError("probe resolutions must be at least 2");
  }

  const int dim = data.space_dim;
  const ProbeLattice lat{dim, data.lipschitz_probe_resolution, data.time_probe_resolution, data.horizon};
  const std::size_t n = lat.size();
  std::vector<double> pv(n), qv(n), av(n), bv(n);
  std::array<double, kMaxDim> x{};
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lat.node(i, x, t);
    const std::span<const double> xs(x.data(), dim);
    const auto c = data.at(xs, t);
    pv[i] = c.p;
    qv[i] = c.q;
    av[i] = c.a;
    bv[i] = c.b;
    if (!std::isfinite(c.p) || !std::isfinite(c.q) || !std::isfinite(c.a) || !std::isfinite(c.b)) {
      std::ostringstream os;
      os << "non-finite coefficient field at probe node t=" << t;
      throw ConfigError(os.str());
    }
  }

  const double floor = exponent_floor(dim) + kStrictMargin;
  const double gap_limit = r_star(dim) - kStrictMargin;

  std::size_t worst_exp = 0, worst_ab = 0, worst_gap = 0;
  double min_exp = std::numeric_limits<double>::infinity();
  double min_ab_margin = std::numeric_limits<double>::infinity();
  double max_gap = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::min(pv[i], qv[i]);
    if (e < min_exp) { min_exp = e; worst_exp = i; }
    // Smallest of a, b, a + b - alpha decides the a-b condition.
    const double margin = std::min({av[i], bv[i], av[i] + bv[i] - data.alpha});
    if (margin < min_ab_margin) { min_ab_margin = margin; worst_ab = i; }
    const double g = std::abs(pv[i] - qv[i]);
    if (g > max_gap) { max_gap = g; worst_gap = i; }
  }

  ValidationReport report;
  auto node_of = [&](std::size_t i) {
    lat.node(i, x, t);
    return node_vector(x, t, dim);
  };

  report.conditions.push_back({"assum1", "p, q > 2N/(N+2)", min_exp >= floor, min_exp, floor, node_of(worst_exp)});
  report.conditions.push_back(
      {"eq:a-b", "a >= 0, b >= 0, a + b >= alpha", min_ab_margin >= 0.0, min_ab_margin, 0.0, node_of(worst_ab)});
  report.conditions.push_back(
      {"eq:gap-z", "max |p - q| < 2/(N+2)", max_gap <= gap_limit, max_gap, gap_limit, node_of(worst_gap)});

  report.lipschitz_pq = std::max(lipschitz_estimate(pv, lat), lipschitz_estimate(qv, lat));
  report.lipschitz_ab = std::max(lipschitz_estimate(av, lat), lipschitz_estimate(bv, lat));
  const bool lip_ok = std::isfinite(report.lipschitz_pq) && std::isfinite(report.lipschitz_ab);
  report.conditions.push_back({"eq:Lip-p-q", "finite-difference Lipschitz estimates of p, q, a, b are finite",
                               lip_ok, std::max(report.lipschitz_pq, report.lipschitz_ab),
                               std::numeric_limits<double>::infinity(), {}});
  return report;
}

ValidationReport validate(const ExponentData& data) {
  auto report = check(data);
  if (const auto* bad = report.first_failure()) {
    std::ostringstream os;
    os.precision(17);
    os << bad->description << " violated: worst value " << bad->worst_value << " vs threshold "
       << bad->threshold;
    if (!bad->worst_node.empty()) {
      os << " at z=(";
      for (std::size_t i = 0; i < bad->worst_node.size(); ++i) os << (i ? "," : "") << bad->worst_node[i];
      os << ')';
    }
    throw ValidationError(bad->anchor, os.str());
  }
  return report;
}

DerivedExponents::DerivedExponents(ExponentData data)
    : data_(std::move(data)), r_sharp_(exponent::r_sharp(data_.space_dim)),
      r_star_(exponent::r_star(data_.space_dim)) {}

double DerivedExponents::s_lower(std::span<const double> x, double t) const {
  return std::min(data_.p.value(x, t), data_.q.value(x, t));
}

double DerivedExponents::s_upper(std::span<const double> x, double t) const {
  return std::max(data_.p.value(x, t), data_.q.value(x, t));
}

double DerivedExponents::r_max2(std::span<const double> x, double t) const {
  return std::max(2.0, s_upper(x, t));
}

double DerivedExponents::r1(std::span<const double> x, double t) const {
  return s_lower(x, t) + r_sharp_ - data_.p.value(x, t);
}

double DerivedExponents::r2(std::span<const double> x, double t) const {
  return s_lower(x, t) + r_sharp_ - data_.q.value(x, t);
}

DerivedExponents derive(const ExponentData& data) {
  validate(data);
  return DerivedExponents(data);
}

}  // namespace dphase::exponent
