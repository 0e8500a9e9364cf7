#include "dphase/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "dphase/errors.hpp"

namespace dphase::quad {

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Rule1D gauss_legendre(int order) {
  if (order < 1) throw DomainError("Gauss-Legendre order must be >= 1");
  const int n = order;
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; nodes are
  // symmetric so only half are computed.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) { p1 = x; p0 = 1.0; }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) { p1 = x; p0 = 1.0; }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1,1] -> [0,1], ascending order.
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

std::vector<double> trapezoid_weights(std::span<const double> times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double h = times[k + 1] - times[k];
    if (!(h > 0.0)) throw DomainError("time partition must be strictly increasing");
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

QuadratureGrid::QuadratureGrid(int dim, int order_per_dim)
    : dim_(dim), order_(order_per_dim), rule_(gauss_legendre(order_per_dim)) {
  if (dim < 1 || dim > 2) throw DomainError("quadrature grid dimension must be 1 or 2");
  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(order_per_dim);
  nodes_.resize(n * dim);
  weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    std::size_t rem = i;
    for (int d = 0; d < dim; ++d) {
      const std::size_t k = rem % order_per_dim;
      rem /= order_per_dim;
      nodes_[i * dim + d] = rule_.nodes[k];
      w *= rule_.weights[k];
    }
    weights_[i] = w;
  }
}

QuadratureGrid QuadratureGrid::for_wavenumber(int dim, int max_wavenumber) {
  return QuadratureGrid(dim, default_order(max_wavenumber));
}

std::size_t QuadratureGrid::axis_index(std::size_t i, int d) const {
  for (int k = 0; k < d; ++k) i /= static_cast<std::size_t>(order_);
  return i % static_cast<std::size_t>(order_);
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("measure weights must be finite and nonnegative");
  }
  total_ = pairwise_sum(weights_);
}

std::shared_ptr<const DiscreteMeasure> spatial_measure(const QuadratureGrid& grid) {
  return std::make_shared<const DiscreteMeasure>(
      std::vector<double>(grid.weights().begin(), grid.weights().end()));
}

SpaceTimeGrid::SpaceTimeGrid(std::shared_ptr<const QuadratureGrid> space, std::vector<double> times)
    : space_(std::move(space)), times_(std::move(times)), time_weights_(trapezoid_weights(times_)) {
  std::vector<double> w;
  w.reserve(size());
  for (double tw : time_weights_) {
    for (double sw : space_->weights()) w.push_back(tw * sw);
  }
  measure_ = std::make_shared<const DiscreteMeasure>(std::move(w));
}

}  // namespace dphase::quad
