#pragma once

#include <span>
#include <string>
#include <vector>

namespace dphase {

/// Maximum spatial dimension supported by the unit-box solver.
inline constexpr int kMaxDim = 2;

/// One term of a sine series: amplitude times the normalized Dirichlet
/// eigenfunction 2^{N/2} prod_i sin(k_i pi x_i).
struct SineTerm {
  std::vector<int> mode;
  double amplitude = 0.0;
};

/// Scalar field on the closed space-time box [0,1]^N x [0,T], drawn from a
/// fixed set of parametric families so a run is fully described by its config.
///
///   constant     c
///   affine       c + g.x + g_t t
///   sinusoidal   c + A sin(pi k.x + phase + omega t)
///   bump         c + A exp(1 - 1/(1 - |x - x0|^2 / R^2)) inside the ball, c outside
///   sine_series  exp(-decay t) * sum_k A_k phi_k(x)
///   bubble       A exp(-decay t) * prod_i x_i (1 - x_i)
///
/// All families are smooth in t; spatial gradients are analytic.
class Field {
 public:
  enum class Family { kConstant, kAffine, kSinusoidal, kBump, kSineSeries, kBubble };

  Field() = default;

  static Field constant(double c);
  static Field affine(double c, std::vector<double> grad, double dt = 0.0);
  static Field sinusoidal(double c, double amplitude, std::vector<double> wave, double phase = 0.0,
                          double omega = 0.0);
  static Field bump(double c, double amplitude, std::vector<double> center, double radius);
  static Field sine_series(std::vector<SineTerm> terms, double decay = 0.0);
  static Field bubble(double amplitude, int dim, double decay = 0.0);

  double value(std::span<const double> x, double t) const;
  /// Writes the spatial gradient into `grad` (size N).
  void gradient(std::span<const double> x, double t, std::span<double> grad) const;
  double time_derivative(std::span<const double> x, double t) const;

  Family family() const noexcept { return family_; }
  std::string family_name() const;
  /// True when the field does not depend on x or t.
  bool is_constant() const noexcept { return family_ == Family::kConstant; }
  double constant_value() const noexcept { return c_; }

  /// Compact human-readable description used in manifests.
  std::string describe() const;

 private:
  Family family_ = Family::kConstant;
  double c_ = 0.0;
  double amplitude_ = 0.0;
  double phase_ = 0.0;
  double omega_ = 0.0;
  double decay_ = 0.0;
  double radius_ = 1.0;
  int dim_ = 0;
  std::vector<double> vec_;  // gradient, wave vector or bump center
  std::vector<SineTerm> terms_;
};

}  // namespace dphase
