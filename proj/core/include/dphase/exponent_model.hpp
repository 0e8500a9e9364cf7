#pragma once

#include <span>
#include <string>
#include <vector>

#include "dphase/field.hpp"

namespace dphase::exponent {

/// Exponents and coefficients evaluated at a single point z = (x, t).
struct PointCoefficients {
  double p = 2.0;
  double q = 2.0;
  double a = 1.0;
  double b = 0.0;
};

/// Problem data: exponent fields p, q, modulating coefficients a, b on
/// [0,1]^N x [0,T], and the coercivity floor alpha with a + b >= alpha.
struct ExponentData {
  int space_dim = 2;
  double horizon = 1.0;
  Field p = Field::constant(2.0);
  Field q = Field::constant(2.0);
  Field a = Field::constant(1.0);
  Field b = Field::constant(0.0);
  double alpha = 1.0;
  /// Probe lattice used by validation: resolution^N nodes in space times
  /// time_probe_resolution nodes in [0,T].
  int lipschitz_probe_resolution = 65;
  int time_probe_resolution = 33;

  PointCoefficients at(std::span<const double> x, double t) const {
    return {p.value(x, t), q.value(x, t), a.value(x, t), b.value(x, t)};
  }
};

/// Lower bound 2N/(N+2) that p and q must exceed.
inline double exponent_floor(int dim) { return 2.0 * dim / (dim + 2.0); }
/// r_sharp = 4/(N+2).
inline double r_sharp(int dim) { return 4.0 / (dim + 2.0); }
/// r_star = 2/(N+2), the admissible gap between p and q.
inline double r_star(int dim) { return 2.0 / (dim + 2.0); }

/// Strictness margin applied to every open inequality on the probe lattice.
inline constexpr double kStrictMargin = 1e-9;

struct ConditionCheck {
  std::string anchor;       ///< "assum1", "eq:a-b", "eq:gap-z", "eq:Lip-p-q"
  std::string description;
  bool passed = false;
  double worst_value = 0.0; ///< value of the checked quantity at the worst node
  double threshold = 0.0;
  std::vector<double> worst_node;  ///< (x_1, ..., x_N, t)
};

struct ValidationReport {
  std::vector<ConditionCheck> conditions;
  double lipschitz_pq = 0.0;
  double lipschitz_ab = 0.0;

  bool passed() const;
  /// First failing condition, or nullptr.
  const ConditionCheck* first_failure() const;
};

/// Evaluates every structural condition on the probe lattice without throwing
/// on violations. Throws ConfigError when a field is not finite somewhere.
ValidationReport check(const ExponentData& data);

/// Like check(), but throws ValidationError naming the first violated condition.
ValidationReport validate(const ExponentData& data);

/// Secondary exponent fields built from p and q.
class DerivedExponents {
 public:
  explicit DerivedExponents(ExponentData data);

  double s_lower(std::span<const double> x, double t) const;
  double s_upper(std::span<const double> x, double t) const;
  /// max{2, s_upper}.
  double r_max2(std::span<const double> x, double t) const;
  /// s_lower + r_sharp - p.
  double r1(std::span<const double> x, double t) const;
  /// s_lower + r_sharp - q.
  double r2(std::span<const double> x, double t) const;

  double r_sharp() const noexcept { return r_sharp_; }
  double r_star() const noexcept { return r_star_; }
  const ExponentData& data() const noexcept { return data_; }

 private:
  ExponentData data_;
  double r_sharp_;
  double r_star_;
};

/// Runs validate() and returns the derived fields.
DerivedExponents derive(const ExponentData& data);

}  // namespace dphase::exponent
