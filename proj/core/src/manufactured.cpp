#include "dphase/manufactured.hpp"

#include <cmath>
#include <numbers>

#include "dphase/errors.hpp"
#include "dphase/flux.hpp"

namespace dphase::mms {
namespace {
constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
}  // namespace

double ModeSolution::time_factor(double t) const { return amplitude * std::exp(-decay * t); }

double ModeSolution::value(std::span<const double> x, double t) const {
  double v = time_factor(t);
  for (int d = 0; d < dim; ++d) v *= kSqrt2 * std::sin(mode[d] * kPi * x[d]);
  return v;
}

void ModeSolution::gradient(std::span<const double> x, double t, std::span<double> grad) const {
  for (int d = 0; d < dim; ++d) {
    double g = time_factor(t);
    for (int e = 0; e < dim; ++e) {
      const double k = mode[e] * kPi;
      g *= kSqrt2 * (e == d ? k * std::cos(k * x[e]) : std::sin(k * x[e]));
    }
    grad[d] = g;
  }
}

void ModeSolution::hessian(std::span<const double> x, double t, std::span<double> hess) const {
  for (int d = 0; d < dim; ++d) {
    for (int e = 0; e < dim; ++e) {
      double h = time_factor(t);
      for (int i = 0; i < dim; ++i) {
        const double k = mode[i] * kPi;
        const double s = kSqrt2 * std::sin(k * x[i]);
        const double c = kSqrt2 * k * std::cos(k * x[i]);
        if (i == d && i == e) {
          h *= -k * k * s;
        } else if (i == d || i == e) {
          h *= c;
        } else {
          h *= s;
        }
      }
      hess[d * dim + e] = h;
    }
  }
}

Field ModeSolution::as_field() const {
  return Field::sine_series({SineTerm{std::vector<int>(mode.begin(), mode.begin() + dim), amplitude}}, decay);
}

double eigenvalue(const ModeSolution& s) {
  double k2 = 0.0;
  for (int d = 0; d < s.dim; ++d) k2 += static_cast<double>(s.mode[d]) * s.mode[d];
  return kPi * kPi * k2;
}

galerkin::SourceTerm manufactured_source(const ModeSolution& s, const exponent::ExponentData& data, double eps) {
  if (s.dim != data.space_dim) throw DomainError("manufactured solution and data dimensions differ");
  if (!(eps > 0.0)) throw DomainError("manufactured source requires eps > 0");
  return [s, data, eps](std::span<const double> x, double t) {
    const int n = s.dim;
    std::array<double, kMaxDim> g{}, gp{}, gq{}, ga{}, gb{};
    std::array<double, kMaxDim * kMaxDim> h{};
    s.gradient(x, t, {g.data(), static_cast<std::size_t>(n)});
    s.hessian(x, t, {h.data(), static_cast<std::size_t>(n * n)});
    const auto c = data.at(x, t);
    flux::GradVec xi(n);
    for (int d = 0; d < n; ++d) xi[d] = g[d];
    // div(F xi) = J : D^2 u + (d_x F at fixed xi) . grad u
    const flux::GradMat jac = flux::flux_jacobian(c, xi, eps);
    double div = 0.0;
    for (int d = 0; d < n; ++d) {
      for (int e = 0; e < n; ++e) div += jac(d, e) * h[e * n + d];
    }
    const std::size_t un = static_cast<std::size_t>(n);
    data.p.gradient(x, t, {gp.data(), un});
    data.q.gradient(x, t, {gq.data(), un});
    data.a.gradient(x, t, {ga.data(), un});
    data.b.gradient(x, t, {gb.data(), un});
    const double beta = flux::beta_eps(xi, eps);
    const double log_half = 0.5 * std::log(beta);
    const double bp = flux::beta_power(beta, c.p - 2.0);
    const double bq = flux::beta_power(beta, c.q - 2.0);
    for (int d = 0; d < n; ++d) {
      const double dF = ga[d] * bp + c.a * bp * log_half * gp[d] + gb[d] * bq + c.b * bq * log_half * gq[d];
      div += dF * g[d];
    }
    const double ut = -s.decay * s.value(x, t);
    return ut - div;
  };
}

double l2_error(const galerkin::SpectralState& state, const galerkin::EigenBasis& basis, const ModeSolution& s) {
  const std::size_t j = basis.index_of({s.mode.data(), static_cast<std::size_t>(s.dim)});
  if (j >= basis.size()) throw DomainError("manufactured mode is not part of the Galerkin basis");
  Eigen::VectorXd diff = state.coeffs;
  diff[static_cast<Eigen::Index>(j)] -= s.time_factor(state.time);
  return diff.norm();
}

}  // namespace dphase::mms
