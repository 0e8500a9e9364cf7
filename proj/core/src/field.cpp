#include "dphase/field.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dphase/errors.hpp"

namespace dphase {
namespace {

constexpr double kPi = std::numbers::pi;

double component(const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; }

double sine_mode(const SineTerm& term, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v *= std::sqrt(2.0) * std::sin(term.mode[i] * kPi * x[i]);
  }
  return v;
}

}  // namespace

Field Field::constant(double c) {
  Field f;
  f.family_ = Family::kConstant;
  f.c_ = c;
  return f;
}

Field Field::affine(double c, std::vector<double> grad, double dt) {
  Field f;
  f.family_ = Family::kAffine;
  f.c_ = c;
  f.vec_ = std::move(grad);
  f.omega_ = dt;
  return f;
}

Field Field::sinusoidal(double c, double amplitude, std::vector<double> wave, double phase,
                        double omega) {
  Field f;
  f.family_ = Family::kSinusoidal;
  f.c_ = c;
  f.amplitude_ = amplitude;
  f.vec_ = std::move(wave);
  f.phase_ = phase;
  f.omega_ = omega;
  return f;
}

Field Field::bump(double c, double amplitude, std::vector<double> center, double radius) {
  if (!(radius > 0.0)) throw ConfigError("bump radius must be positive");
  Field f;
  f.family_ = Family::kBump;
  f.c_ = c;
  f.amplitude_ = amplitude;
  f.vec_ = std::move(center);
  f.radius_ = radius;
  return f;
}

Field Field::sine_series(std::vector<SineTerm> terms, double decay) {
  for (const auto& t : terms) {
    if (t.mode.empty()) throw ConfigError("sine_series term without a mode");
    for (int k : t.mode) {
      if (k < 1) throw ConfigError("sine_series wavenumbers must be >= 1");
    }
  }
  Field f;
  f.family_ = Family::kSineSeries;
  f.terms_ = std::move(terms);
  f.decay_ = decay;
  return f;
}

Field Field::bubble(double amplitude, int dim, double decay) {
  Field f;
  f.family_ = Family::kBubble;
  f.amplitude_ = amplitude;
  f.dim_ = dim;
  f.decay_ = decay;
  return f;
}

double Field::value(std::span<const double> x, double t) const {
  switch (family_) {
    case Family::kConstant:
      return c_;
    case Family::kAffine: {
      double v = c_ + omega_ * t;
      for (std::size_t i = 0; i < x.size(); ++i) v += component(vec_, i) * x[i];
      return v;
    }
    case Family::kSinusoidal: {
      double arg = phase_ + omega_ * t;
      for (std::size_t i = 0; i < x.size(); ++i) arg += kPi * component(vec_, i) * x[i];
      return c_ + amplitude_ * std::sin(arg);
    }
    case Family::kBump: {
      double r2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - component(vec_, i);
        r2 += d * d;
      }
      r2 /= radius_ * radius_;
      if (r2 >= 1.0) return c_;
      return c_ + amplitude_ * std::exp(1.0 - 1.0 / (1.0 - r2));
    }
    case Family::kSineSeries: {
      double v = 0.0;
      for (const auto& term : terms_) {
        if (term.mode.size() != x.size()) throw ConfigError("sine_series mode dimension mismatch");
        v += term.amplitude * sine_mode(term, x);
      }
      return v * std::exp(-decay_ * t);
    }
    case Family::kBubble: {
      double v = amplitude_ * std::exp(-decay_ * t);
      for (std::size_t i = 0; i < x.size(); ++i) v *= x[i] * (1.0 - x[i]);
      return v;
    }
  }
  return 0.0;
}

void Field::gradient(std::span<const double> x, double t, std::span<double> grad) const {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) grad[i] = 0.0;
  switch (family_) {
    case Family::kConstant:
      return;
    case Family::kAffine:
      for (std::size_t i = 0; i < n; ++i) grad[i] = component(vec_, i);
      return;
    case Family::kSinusoidal: {
      double arg = phase_ + omega_ * t;
      for (std::size_t i = 0; i < n; ++i) arg += kPi * component(vec_, i) * x[i];
      const double c = amplitude_ * std::cos(arg);
      for (std::size_t i = 0; i < n; ++i) grad[i] = c * kPi * component(vec_, i);
      return;
    }
    case Family::kBump: {
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - component(vec_, i);
        r2 += d * d;
      }
      const double R2 = radius_ * radius_;
      r2 /= R2;
      if (r2 >= 1.0) return;
      const double s = 1.0 - r2;
      const double scale = -amplitude_ * std::exp(1.0 - 1.0 / s) * 2.0 / (R2 * s * s);
      for (std::size_t i = 0; i < n; ++i) grad[i] = scale * (x[i] - component(vec_, i));
      return;
    }
    case Family::kSineSeries: {
      const double decay = std::exp(-decay_ * t);
      for (const auto& term : terms_) {
        if (term.mode.size() != n) throw ConfigError("sine_series mode dimension mismatch");
        for (std::size_t d = 0; d < n; ++d) {
          double g = term.amplitude * decay;
          for (std::size_t i = 0; i < n; ++i) {
            const double k = term.mode[i] * kPi;
            g *= std::sqrt(2.0) * (i == d ? k * std::cos(k * x[i]) : std::sin(k * x[i]));
          }
          grad[d] += g;
        }
      }
      return;
    }
    case Family::kBubble: {
      const double amp = amplitude_ * std::exp(-decay_ * t);
      for (std::size_t d = 0; d < n; ++d) {
        double g = amp;
        for (std::size_t i = 0; i < n; ++i) {
          g *= (i == d) ? (1.0 - 2.0 * x[i]) : x[i] * (1.0 - x[i]);
        }
        grad[d] = g;
      }
      return;
    }
  }
}

double Field::time_derivative(std::span<const double> x, double t) const {
  switch (family_) {
    case Family::kConstant:
    case Family::kBump:
      return 0.0;
    case Family::kAffine:
      return omega_;
    case Family::kSinusoidal: {
      double arg = phase_ + omega_ * t;
      for (std::size_t i = 0; i < x.size(); ++i) arg += kPi * component(vec_, i) * x[i];
      return amplitude_ * omega_ * std::cos(arg);
    }
    case Family::kSineSeries:
    case Family::kBubble:
      return -decay_ * value(x, t);
  }
  return 0.0;
}

std::string Field::family_name() const {
  switch (family_) {
    case Family::kConstant: return "constant";
    case Family::kAffine: return "affine";
    case Family::kSinusoidal: return "sinusoidal";
    case Family::kBump: return "bump";
    case Family::kSineSeries: return "sine_series";
    case Family::kBubble: return "bubble";
  }
  return "unknown";
}

std::string Field::describe() const {
  std::ostringstream os;
  os.precision(17);
  auto list = [&os](const std::vector<double>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  os << family_name() << '(';
  switch (family_) {
    case Family::kConstant: os << "c=" << c_; break;
    case Family::kAffine: os << "c=" << c_ << ",grad="; list(vec_); os << ",dt=" << omega_; break;
    case Family::kSinusoidal:
      os << "c=" << c_ << ",amp=" << amplitude_ << ",wave="; list(vec_);
      os << ",phase=" << phase_ << ",omega=" << omega_;
      break;
    case Family::kBump:
      os << "c=" << c_ << ",amp=" << amplitude_ << ",center="; list(vec_); os << ",radius=" << radius_;
      break;
    case Family::kSineSeries:
      os << "decay=" << decay_ << ",terms=" << terms_.size();
      break;
    case Family::kBubble: os << "amp=" << amplitude_ << ",decay=" << decay_; break;
  }
  os << ')';
  return os.str();
}

}  // namespace dphase
