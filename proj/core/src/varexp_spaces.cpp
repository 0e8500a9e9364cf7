#include "dphase/varexp_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dphase/errors.hpp"

namespace dphase::varexp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_measure(const SampledField& f, const SampledField& g) {
  if (!f.measure || f.measure != g.measure) {
    if (!f.measure || !g.measure || f.measure->size() != g.measure->size()) {
      throw DomainError("sampled fields live on different measures");
    }
  }
}

// Sum of w_i * term(i) with deterministic pairwise reduction.
template <class Term>
double integrate(std::span<const double> weights, Term&& term) {
  std::vector<double> parts(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) parts[i] = weights[i] == 0.0 ? 0.0 : weights[i] * term(i);
  return quad::pairwise_sum(parts);
}

double raise(double base, double exponent) {
  if (base == 0.0) return exponent > 0.0 ? 0.0 : 1.0;
  return std::pow(base, exponent);
}

std::pair<double, double> exponent_range(const SampledField& r, const SampledField* support = nullptr) {
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (support && support->magnitude(i) == 0.0) continue;
    lo = std::min(lo, r.values[i]);
    hi = std::max(hi, r.values[i]);
  }
  return {lo, hi};
}

double scaled_modular(const SampledField& f, const SampledField& r, double lambda) {
  return integrate(f.weights(), [&](std::size_t i) { return raise(f.magnitude(i) / lambda, r.values[i]); });
}

}  // namespace

SampledField::SampledField(std::shared_ptr<const quad::DiscreteMeasure> m, int comps, std::vector<double> v)
    : measure(std::move(m)), components(comps), values(std::move(v)) {
  if (!measure) throw DomainError("sampled field without a measure");
  if (values.size() != measure->size() * static_cast<std::size_t>(components)) {
    throw DomainError("sampled field value count does not match the node count");
  }
  // +inf is admitted for exponent fields (the L^infinity part).
  for (double x : values) {
    if (std::isnan(x) || x == -kInf) throw DomainError("sampled field contains NaN or -inf values");
  }
}

double SampledField::magnitude(std::size_t node) const {
  if (components == 1) return std::abs(values[node]);
  double s = 0.0;
  for (int c = 0; c < components; ++c) {
    const double v = values[node * components + c];
    s += v * v;
  }
  return std::sqrt(s);
}

flux::GradVec SampledField::vector_at(std::size_t node) const {
  flux::GradVec v(components);
  for (int c = 0; c < components; ++c) v[c] = values[node * components + c];
  return v;
}

CoefficientSamples sample_coefficients(const quad::QuadratureGrid& grid, const exponent::ExponentData& data,
                                       double t) {
  CoefficientSamples out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = data.at(grid.node(i), t);
  return out;
}

CoefficientSamples sample_coefficients(const quad::SpaceTimeGrid& grid, const exponent::ExponentData& data) {
  CoefficientSamples out;
  out.reserve(grid.size());
  for (double t : grid.times()) {
    for (std::size_t i = 0; i < grid.space().size(); ++i) out.push_back(data.at(grid.space().node(i), t));
  }
  return out;
}

SampledField sample(const quad::QuadratureGrid& grid, const Field& field, double t) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = field.value(grid.node(i), t);
  return SampledField(quad::spatial_measure(grid), 1, std::move(v));
}

double modular(const SampledField& f, const SampledField& r) {
  require_same_measure(f, r);
  for (double e : r.values) {
    if (!(e > 1.0)) throw DomainError("modular requires exponent > 1 at every node");
  }
  return scaled_modular(f, r, 1.0);
}

double luxemburg_norm(const SampledField& f, const SampledField& r, double rel_tol) {
  const double a = modular(f, r);
  if (a == 0.0) return 0.0;
  if (!(rel_tol > 0.0)) throw DomainError("luxemburg_norm: rel_tol must be positive");
  // Constant-exponent closed forms a^{1/r+} and a^{1/r-} bracket the root. Very
  // large exponents can overflow the unscaled modular; start from 1 then.
  double lo = 1.0, hi = 1.0;
  if (std::isfinite(a)) {
    const auto [r_lo, r_hi] = exponent_range(r, &f);
    lo = std::pow(a, 1.0 / r_hi);
    hi = std::pow(a, 1.0 / r_lo);
    if (lo > hi) std::swap(lo, hi);
  }
  int expansions = 0;
  while (scaled_modular(f, r, lo) < 1.0) {
    lo *= 0.5;
    if (++expansions > 60) throw NumericError("luxemburg_norm: lower bracket not found");
  }
  expansions = 0;
  while (scaled_modular(f, r, hi) > 1.0) {
    hi *= 2.0;
    if (++expansions > 60) throw NumericError("luxemburg_norm: upper bracket not found");
  }
  for (int it = 0; it < 400 && (hi - lo) > rel_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (scaled_modular(f, r, mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double luxemburg_norm_of_one(const SampledField& r) {
  bool has_infinite = false;
  std::vector<double> ones(r.size(), 0.0);
  std::vector<double> finite_exp(r.size(), 2.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.weights()[i] == 0.0) continue;
    if (std::isinf(r.values[i])) {
      has_infinite = true;
    } else {
      ones[i] = 1.0;
      finite_exp[i] = r.values[i];
    }
  }
  const SampledField one(r.measure, 1, std::move(ones));
  const SampledField exps(r.measure, 1, std::move(finite_exp));
  const double finite_part = luxemburg_norm(one, exps);
  // On the L^infinity part, |1/lambda| <= 1 requires lambda >= 1.
  return has_infinite ? std::max(1.0, finite_part) : finite_part;
}

SandwichReport check_modular_norm_sandwich(const SampledField& f, const SampledField& r) {
  SandwichReport rep;
  rep.modular = modular(f, r);
  rep.norm = luxemburg_norm(f, r);
  const auto [lo, hi] = exponent_range(r);
  rep.r_minus = lo;
  rep.r_plus = hi;
  const double a = std::pow(rep.norm, lo), b = std::pow(rep.norm, hi);
  rep.lower = std::min(a, b);
  rep.upper = std::max(a, b);
  rep.lower_slack = rep.modular - rep.lower;
  rep.upper_slack = rep.upper - rep.modular;
  const double tol = 1e-8 * std::max(1.0, rep.modular);
  rep.holds = rep.lower_slack >= -tol && rep.upper_slack >= -tol;
  return rep;
}

HolderReport holder_pairing_check(const SampledField& f, const SampledField& g, const SampledField& r) {
  require_same_measure(f, g);
  require_same_measure(f, r);
  std::vector<double> conj(r.values.size());
  for (std::size_t i = 0; i < conj.size(); ++i) {
    if (!(r.values[i] > 1.0)) throw DomainError("holder_pairing_check requires r > 1");
    conj[i] = r.values[i] / (r.values[i] - 1.0);
  }
  const SampledField r_conj(r.measure, 1, std::move(conj));
  HolderReport rep;
  rep.lhs = integrate(f.weights(), [&](std::size_t i) { return f.magnitude(i) * g.magnitude(i); });
  rep.norm_f = luxemburg_norm(f, r);
  rep.norm_g = luxemburg_norm(g, r_conj);
  rep.rhs = 2.0 * rep.norm_f * rep.norm_g;
  rep.slack = rep.rhs - rep.lhs;
  rep.holds = rep.slack >= -1e-8;
  return rep;
}

double musielak_modular(const SampledField& u, const CoefficientSamples& c0) {
  if (c0.size() != u.size()) throw DomainError("musielak_modular: coefficient samples do not match field");
  return integrate(u.weights(), [&](std::size_t i) {
    const auto& c = c0[i];
    const double s = std::max(2.0, std::min(c.p, c.q));
    const double r = std::max(2.0, c.p);
    const double sigma = std::max(2.0, c.q);
    const double m = u.magnitude(i);
    return raise(m, s) + c.a * raise(m, r) + c.b * raise(m, sigma);
  });
}

double composite_N(const SampledField& grad_w, const CoefficientSamples& c) {
  if (c.size() != grad_w.size()) throw DomainError("composite_N: coefficient samples do not match field");
  return integrate(grad_w.weights(), [&](std::size_t i) {
    const double m = grad_w.magnitude(i);
    return c[i].a * raise(m, c[i].p) + c[i].b * raise(m, c[i].q);
  });
}

double pairing_G_eps(const SampledField& grad_u, const SampledField& grad_v, double eps,
                     const CoefficientSamples& c) {
  require_same_measure(grad_u, grad_v);
  if (c.size() != grad_u.size()) throw DomainError("pairing_G_eps: coefficient samples do not match field");
  return integrate(grad_u.weights(), [&](std::size_t i) {
    const auto xi = grad_u.vector_at(i);
    const auto eta = grad_v.vector_at(i);
    return (flux::flux_vector(c[i], xi, eps) - flux::flux_vector(c[i], eta, eps)).dot(xi - eta);
  });
}

EmbeddingReport embedding_check(const SampledField& grad_u, const CoefficientSamples& c, double alpha) {
  const std::size_t n = grad_u.size();
  EmbeddingReport rep;
  std::vector<double> ca_exp(n), cb_exp(n);
  double s_minus = kInf, s_plus = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double sl = std::min(c[i].p, c[i].q);
    const double su = std::max(c[i].p, c[i].q);
    s_minus = std::min(s_minus, sl);
    s_plus = std::max(s_plus, su);
    rep.a_plus = std::max(rep.a_plus, raise(c[i].a, 1.0 - sl / c[i].p));
    rep.b_plus = std::max(rep.b_plus, raise(c[i].b, 1.0 - sl / c[i].q));
    // Conjugate of p / s_ is p / (p - s_), infinite where p == s_.
    ca_exp[i] = c[i].p > sl ? c[i].p / (c[i].p - sl) : kInf;
    cb_exp[i] = c[i].q > sl ? c[i].q / (c[i].q - sl) : kInf;
  }
  rep.c_a = luxemburg_norm_of_one(SampledField(grad_u.measure, 1, std::move(ca_exp)));
  rep.c_b = luxemburg_norm_of_one(SampledField(grad_u.measure, 1, std::move(cb_exp)));
  rep.composite = composite_N(grad_u, c);
  rep.lhs = alpha * integrate(grad_u.weights(), [&](std::size_t i) {
    return raise(grad_u.magnitude(i), std::min(c[i].p, c[i].q));
  });
  const double nn = rep.composite;
  rep.rhs = 4.0 * (rep.c_a + rep.c_b) * (rep.a_plus + rep.b_plus) *
            (raise(nn, s_minus / s_plus) + raise(nn, s_plus / s_minus));
  rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-10) + 1e-14;
  return rep;
}

MonotoneControlReport monotone_control_check(const SampledField& grad_u, const SampledField& grad_v, double eps,
                                             const CoefficientSamples& c) {
  require_same_measure(grad_u, grad_v);
  const std::size_t n = grad_u.size();
  MonotoneControlReport rep;
  std::vector<double> diff(grad_u.values.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = grad_u.values[k] - grad_v.values[k];
  const SampledField grad_w(grad_u.measure, grad_u.components, std::move(diff));
  rep.n_diff = composite_N(grad_w, c);
  rep.g_eps = pairing_G_eps(grad_u, grad_v, eps, c);

  double s_minus = kInf, s_plus = -kInf;
  for (const auto& ci : c) {
    s_minus = std::min(s_minus, std::min(ci.p, ci.q));
    s_plus = std::max(s_plus, std::max(ci.p, ci.q));
  }

  double constant = 0.0;
  double chain = 0.0;
  for (int term = 0; term < 2; ++term) {
    auto coef = [&](std::size_t i) { return term == 0 ? c[i].a : c[i].b; };
    auto expo = [&](std::size_t i) { return term == 0 ? c[i].p : c[i].q; };

    // {e >= 2}: c |w|^e <= 2 C_e c S_e pointwise.
    double c_plus = 0.0;
    const double plus_part = integrate(grad_u.weights(), [&](std::size_t i) {
      const double e = expo(i);
      if (e < 2.0) return 0.0;
      const double ce = flux::monotonicity_constant(e);
      c_plus = std::max(c_plus, 2.0 * ce);
      return 2.0 * ce * coef(i) * flux::monotonicity_gap(grad_u.vector_at(i), grad_v.vector_at(i), e, eps);
    });

    // {e < 2}: Holder split c|w|^e = c^{1-e/2} R^{e/2} (c R^{-1} |w|^2)^{e/2},
    // R = (eps^2 + |xi|^2 + |eta|^2)^{(2-e)/2}.
    double sup_coef = 0.0, e_lo = kInf, e_hi = -kInf;
    bool any_minus = false;
    std::vector<double> r_vals(n, 0.0), r_exp(n, 2.0);
    const double m_integral = integrate(grad_u.weights(), [&](std::size_t i) {
      const double e = expo(i);
      if (e >= 2.0) return 0.0;
      any_minus = true;
      e_lo = std::min(e_lo, e);
      e_hi = std::max(e_hi, e);
      sup_coef = std::max(sup_coef, raise(coef(i), 1.0 - e / 2.0));
      const auto xi = grad_u.vector_at(i);
      const auto eta = grad_v.vector_at(i);
      const double base = eps * eps + xi.squaredNorm() + eta.squaredNorm();
      r_vals[i] = raise(base, (2.0 - e) / 2.0 * e / 2.0);
      r_exp[i] = 2.0 / (2.0 - e);
      if (base == 0.0) return 0.0;
      return coef(i) * (xi - eta).squaredNorm() * std::pow(base, (e - 2.0) / 2.0);
    });
    double c_minus = 0.0;
    double minus_part = 0.0;
    if (any_minus) {
      const double r_norm = luxemburg_norm(SampledField(grad_u.measure, 1, r_vals), SampledField(grad_u.measure, 1, r_exp));
      const double holder = 2.0 * sup_coef * r_norm;
      minus_part = holder * std::max(raise(m_integral, e_hi / 2.0), raise(m_integral, e_lo / 2.0));
      // M <= G / (e- - 1) and x^e <= x^{s-/2} + x^{s+/2} for e in [s-/2, s+/2].
      const double k = 1.0 / (e_lo - 1.0);
      c_minus = holder * std::pow(k, e_hi / 2.0);
    }
    chain += plus_part + minus_part;
    constant += std::max(c_plus, c_minus);
  }
  rep.chain_bound = chain;
  rep.constant = constant;
  const double g = std::max(rep.g_eps, 0.0);
  rep.power_bound = constant * (raise(g, s_plus / 2.0) + raise(g, s_minus / 2.0) + g);
  const double tol = 1e-10;
  rep.holds = rep.n_diff <= rep.chain_bound * (1.0 + tol) + 1e-14 &&
              rep.n_diff <= rep.power_bound * (1.0 + tol) + 1e-14;
  return rep;
}

}  // namespace dphase::varexp
