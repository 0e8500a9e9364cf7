#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace dphase::quad {

/// Deterministic pairwise (tree) summation. The reduction order depends only
/// on the input length, so results are bit-stable.
double pairwise_sum(std::span<const double> values);

/// Gauss-Legendre rule with `order` points mapped to (0, 1).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule1D gauss_legendre(int order);

/// Default Gauss-Legendre order for sine modes up to `max_wavenumber`:
/// 2 * max_wavenumber + 12, the smallest affine rule that integrates every
/// basis product to roundoff (Gram matrix = I to 1e-13).
inline int default_order(int max_wavenumber) { return 2 * max_wavenumber + 12; }

/// Trapezoid weights for an increasing time partition t_0 < ... < t_K.
std::vector<double> trapezoid_weights(std::span<const double> times);

/// Tensor-product Gauss-Legendre grid on (0,1)^N. Node index layout: x_1 varies
/// fastest.
class QuadratureGrid {
 public:
  QuadratureGrid(int dim, int order_per_dim);

  /// Grid of order default_order(max_wavenumber).
  static QuadratureGrid for_wavenumber(int dim, int max_wavenumber);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> node(std::size_t i) const {
    return {nodes_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> weights() const noexcept { return weights_; }
  const Rule1D& rule() const noexcept { return rule_; }
  /// 1D index of node i along axis d.
  std::size_t axis_index(std::size_t i, int d) const;

 private:
  int dim_;
  int order_;
  Rule1D rule_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Positive weights over a finite node set: the carrier measure for sampled
/// fields, either spatial or space-time.
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::vector<double> weights);
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double total() const noexcept { return total_; }

 private:
  std::vector<double> weights_;
  double total_;
};

std::shared_ptr<const DiscreteMeasure> spatial_measure(const QuadratureGrid& grid);

/// Space-time grid: a spatial rule times a time partition of [0,T] carrying
/// trapezoid weights. Node index = time_index * space.size() + space_index.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(std::shared_ptr<const QuadratureGrid> space, std::vector<double> times);

  const QuadratureGrid& space() const noexcept { return *space_; }
  std::shared_ptr<const QuadratureGrid> space_ptr() const noexcept { return space_; }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> time_weights() const noexcept { return time_weights_; }
  std::size_t size() const noexcept { return times_.size() * space_->size(); }
  std::shared_ptr<const DiscreteMeasure> measure() const { return measure_; }

 private:
  std::shared_ptr<const QuadratureGrid> space_;
  std::vector<double> times_;
  std::vector<double> time_weights_;
  std::shared_ptr<const DiscreteMeasure> measure_;
};

}  // namespace dphase::quad
