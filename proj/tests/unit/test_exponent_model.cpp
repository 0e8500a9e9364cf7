#include <doctest.h>

#include <array>
#include <cmath>

#include "dphase/errors.hpp"
#include "dphase/exponent_model.hpp"

using namespace dphase;
using exponent::ExponentData;

namespace {

ExponentData constant_data(int dim, double p, double q, double a, double b, double alpha) {
  ExponentData d;
  d.space_dim = dim;
  d.horizon = 0.5;
  d.p = Field::constant(p);
  d.q = Field::constant(q);
  d.a = Field::constant(a);
  d.b = Field::constant(b);
  d.alpha = alpha;
  d.lipschitz_probe_resolution = 9;
  d.time_probe_resolution = 3;
  return d;
}

const exponent::ConditionCheck* find(const exponent::ValidationReport& rep, const std::string& anchor) {
  for (const auto& c : rep.conditions) {
    if (c.anchor == anchor) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("crossing constants p=1.8, q=2.2 satisfy every condition") {
  const auto rep = exponent::check(constant_data(2, 1.8, 2.2, 0.5, 0.5, 0.9));
  CHECK(rep.passed());
  const auto* gap = find(rep, "eq:gap-z");
  REQUIRE(gap);
  CHECK(gap->worst_value == doctest::Approx(0.4));
  CHECK(gap->threshold == doctest::Approx(0.5));
}

TEST_CASE("gap 0.6 in two dimensions is rejected") {
  const auto data = constant_data(2, 2.0, 2.6, 0.5, 0.5, 1.0);
  const auto rep = exponent::check(data);
  CHECK_FALSE(rep.passed());
  REQUIRE(rep.first_failure());
  CHECK(rep.first_failure()->anchor == "eq:gap-z");
  try {
    exponent::validate(data);
    FAIL("validate accepted a gap violation");
  } catch (const ValidationError& e) {
    CHECK(e.condition() == "eq:gap-z");
  }
}

TEST_CASE("p(x)-Laplacian special case a=1, b=0 validates") {
  CHECK(exponent::check(constant_data(2, 2.0, 2.0, 1.0, 0.0, 1.0)).passed());
}

TEST_CASE("coercivity floor and exponent floor") {
  CHECK(find(exponent::check(constant_data(2, 2.0, 2.0, 0.3, 0.3, 1.0)), "eq:a-b")->passed == false);
  // 2N/(N+2) = 1 for N = 2.
  CHECK(find(exponent::check(constant_data(2, 1.0, 1.2, 0.5, 0.5, 1.0)), "assum1")->passed == false);
  CHECK(find(exponent::check(constant_data(2, 1.05, 1.2, 0.5, 0.5, 1.0)), "assum1")->passed);
}

TEST_CASE("non-finite field is a configuration error") {
  auto d = constant_data(2, 2.0, 2.0, 0.5, 0.5, 1.0);
  d.p = Field::constant(std::nan(""));
  CHECK_THROWS_AS(exponent::check(d), ConfigError);
}

TEST_CASE("derived constants for N=2") {
  const auto der = exponent::derive(constant_data(2, 2.0, 2.0, 0.5, 0.5, 1.0));
  CHECK(der.r_sharp() == 1.0);
  CHECK(der.r_star() == 0.5);
  CHECK(exponent::r_sharp(1) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("equal exponents collapse the derived fields") {
  const auto der = exponent::derive(constant_data(2, 1.7, 1.7, 0.5, 0.5, 1.0));
  const std::array<double, 2> x{0.3, 0.8};
  CHECK(der.s_lower(x, 0.1) == 1.7);
  CHECK(der.s_upper(x, 0.1) == 1.7);
  CHECK(der.r1(x, 0.1) == doctest::Approx(der.r_sharp()));
  CHECK(der.r2(x, 0.1) == doctest::Approx(der.r_sharp()));
  CHECK(der.r_max2(x, 0.1) == 2.0);
}

TEST_CASE("affine p against scalar evaluation of the definitions") {
  auto d = constant_data(2, 2.0, 2.0, 0.5, 0.5, 1.0);
  d.p = Field::affine(2.0, {0.2, 0.0});
  const auto der = exponent::derive(d);
  for (double x1 : {0.0, 0.125, 0.5, 0.9, 1.0}) {
    const std::array<double, 2> x{x1, 0.4};
    CHECK(der.s_lower(x, 0.0) == 2.0);
    CHECK(der.s_upper(x, 0.0) == doctest::Approx(2.0 + 0.2 * x1));
    CHECK(der.r1(x, 0.0) == doctest::Approx(1.0 - 0.2 * x1).epsilon(1e-14));
    CHECK(der.r2(x, 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("defining identity of r1, r2 and the halved gap on probe nodes") {
  auto d = constant_data(2, 2.0, 2.0, 0.5, 0.5, 1.0);
  d.p = Field::affine(1.8, {0.4, 0.0});
  d.q = Field::affine(2.2, {-0.4, 0.0});
  const auto der = exponent::derive(d);
  for (int i = 0; i <= 16; ++i) {
    for (int j = 0; j <= 4; ++j) {
      const std::array<double, 2> x{i / 16.0, j / 4.0};
      const double p = d.p.value(x, 0.0), q = d.q.value(x, 0.0);
      const double lhs = p + der.r1(x, 0.0);
      CHECK(lhs == doctest::Approx(der.s_lower(x, 0.0) + der.r_sharp()).epsilon(1e-15));
      CHECK(lhs == doctest::Approx(q + der.r2(x, 0.0)).epsilon(1e-15));
      CHECK(der.r1(x, 0.0) >= der.r_sharp() - der.r_star());
      CHECK(2.0 * (der.s_upper(x, 0.0) - der.s_lower(x, 0.0)) < der.r_sharp());
    }
  }
}

TEST_CASE("axis-wise Lipschitz estimate of an affine field") {
  auto d = constant_data(2, 2.0, 2.0, 0.5, 0.5, 1.0);
  d.p = Field::affine(2.0, {0.3, -0.4});
  const auto rep = exponent::check(d);
  CHECK(rep.lipschitz_pq == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(rep.lipschitz_ab == 0.0);
}
