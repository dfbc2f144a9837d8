#include "doctest.h"
#include "test_support.hpp"

#include "psido/sampled.hpp"
#include "psido/symbol_json.hpp"

using namespace psido;
using testing_support::point;
using testing_support::random_poly;

namespace {

const PhaseSpace P1(1);
PolySymbol X() { return PolySymbol::x(P1, 0); }
PolySymbol XI() { return PolySymbol::xi(P1, 0); }

// Naive bracket for n = 1 written out from partial derivatives on monomials.
Complex bracket_at(const PolySymbol& a, const PolySymbol& b, const Point& r) {
  auto d = [&](const PolySymbol& f, int v) { return f.derivative(v).evaluate(r); };
  return d(a, 1) * d(b, 0) - d(a, 0) * d(b, 1);
}

}  // namespace

TEST_CASE("poisson bracket examples") {
  CHECK(poisson_bracket(X(), XI()) == PolySymbol::constant(P1, -1.0));
  const PolySymbol a = X() * XI() + X().pow(3);
  CHECK(poisson_bracket(a, a).is_zero());
  CHECK(poisson_bracket(X().pow(2), XI().pow(2)) == X() * XI() * Complex(-4.0));
}

TEST_CASE("hamiltonian field examples") {
  CHECK(hamiltonian_field_apply(X(), XI()) == PolySymbol::constant(P1, -1.0));
  CHECK(hamiltonian_field_apply(X() * XI(), X()) == X());
  CHECK(hamiltonian_field_apply(X().pow(2) + XI(), PolySymbol::constant(P1, 3.0)).is_zero());
}

TEST_CASE("bracket agrees with pointwise derivative formula") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const PolySymbol a = random_poly(rng, P1, 4, 5);
    const PolySymbol b = random_poly(rng, P1, 4, 5);
    const Point r = point({0.3 * trial - 2.0, 0.7 - 0.1 * trial});
    CHECK(std::abs(poisson_bracket(a, b).evaluate(r) - bracket_at(a, b, r)) < 1e-10);
  }
}

TEST_CASE("mismatched phase spaces are rejected") {
  CHECK_THROWS_AS(poisson_bracket(X(), PolySymbol::x(PhaseSpace(2), 0)), DimensionError);
}

TEST_CASE("jacobi and leibniz hold exactly") {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 2; ++n) {
    const PhaseSpace ps(n);
    for (int trial = 0; trial < 15; ++trial) {
      const PolySymbol a = random_poly(rng, ps, 4, 4);
      const PolySymbol b = random_poly(rng, ps, 4, 4);
      const PolySymbol c = random_poly(rng, ps, 4, 4);
      const PolySymbol jac = poisson_bracket(a, poisson_bracket(b, c)) + poisson_bracket(b, poisson_bracket(c, a)) +
                             poisson_bracket(c, poisson_bracket(a, b));
      CHECK(jac.max_abs_coefficient() < 1e-12);
      const PolySymbol leib = poisson_bracket(a, b * c) - poisson_bracket(a, b) * c - b * poisson_bracket(a, c);
      CHECK(leib.max_abs_coefficient() < 1e-12);
      CHECK((poisson_bracket(a, b) + poisson_bracket(b, a)).max_abs_coefficient() < 1e-15);
    }
  }
}

TEST_CASE("evaluate") {
  const HExpansion a = HExpansion::principal(X() * XI(), 2);
  CHECK(a.evaluate(point({2.0, 3.0}), 0.4) == Complex(6.0));
  const HExpansion b = HExpansion::from_coeffs({PolySymbol::constant(P1, 1.0), X()}, 1);
  CHECK(std::abs(b.evaluate(point({1.0, 0.0}), 0.1) - 1.1) < 1e-15);
  const PolySymbol one = PolySymbol::constant(P1, 1.0);
  const HExpansion g = HExpansion::from_coeffs({one, one, one}, 2);
  CHECK(g.evaluate(point({0.0, 0.0}), 0.5) == Complex(1.75));
  CHECK_THROWS_AS(g.evaluate(point({0.0, 0.0}), 0.0), DomainError);
}

TEST_CASE("evaluate is linear and matches horner") {
  std::mt19937_64 rng(3);
  const PhaseSpace ps(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = testing_support::random_expansion(rng, ps, 3, 4, 2);
    const auto b = testing_support::random_expansion(rng, ps, 3, 4, 2);
    const Point r = point({0.2, -0.5, 1.1, 0.3});
    const double h = 0.3;
    const Complex lhs = (a + b * Complex(2.0, -1.0)).evaluate(r, h);
    const Complex rhs = a.evaluate(r, h) + Complex(2.0, -1.0) * b.evaluate(r, h);
    CHECK(std::abs(lhs - rhs) < 1e-12);
    // Horner in h over pointwise coefficient values.
    Complex horner = 0.0;
    for (int j = a.trunc(); j >= 0; --j) horner = horner * h + a.coeff(j).evaluate(r);
    CHECK(std::abs(horner - a.evaluate(r, h)) < 1e-12);
  }
}

TEST_CASE("truncation is explicit") {
  const HExpansion a = HExpansion::principal(X(), 1);
  CHECK_THROWS_AS(a.coeff(2), TruncationError);
  const HExpansion b = HExpansion::principal(XI(), 3);
  CHECK((a + b).trunc() == 1);
}

TEST_CASE("cutoff examples and plateau") {
  const Cutoff chi(point({0.0, 0.0}), 1.0, 2.0);
  const UniformGrid grid = UniformGrid::around(point({0.0, 0.0}), 3.0, 61);
  const SampledSymbol one = apply_cutoff(PolySymbol::constant(P1, 1.0), chi, grid);
  CHECK(one.at(point({0.0, 0.0})) == Complex(1.0));
  const SampledSymbol sx = apply_cutoff(X(), chi, grid);
  CHECK(sx.at(point({0.5, 0.0})) == Complex(0.5));
  CHECK(sx.at(point({2.5, 0.0})) == Complex(0.0));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point p = grid.point(i);
    const double v = chi(p);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (p.norm() <= 1.0) CHECK(v == 1.0);
    if (p.norm() >= 2.0) CHECK(v == 0.0);
  }
  const Cutoff smooth(point({0.0, 0.0}), 1.0, 2.0, BumpProfile::SmoothExp);
  CHECK(smooth(point({1.5, 0.0})) == doctest::Approx(0.5));
}

TEST_CASE("cutoff gradient matches finite differences") {
  const Cutoff chi(point({0.1, -0.2}), 0.5, 1.5);
  const Point p = point({0.7, 0.4});
  const Point g = chi.gradient(p);
  for (int k = 0; k < 2; ++k) {
    Point e = Point::Zero(2);
    e[k] = 1e-6;
    const double fd = (chi(p + e) - chi(p - e)) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("regions must be simply connected") {
  CHECK_THROWS_AS(Region::ball(point({0.0, 0.0}), 1.0, false), RegionError);
  CHECK_THROWS_AS(Region::full_torus(false), RegionError);
  const Region r = Region::box(point({-1.0, -1.0}), point({1.0, 2.0}));
  CHECK(r.contains(point({0.0, 1.5})));
  CHECK_FALSE(r.contains(point({0.0, 2.5})));
}

TEST_CASE("json round trip is bit stable") {
  std::mt19937_64 rng(9);
  const auto a = testing_support::random_expansion(rng, PhaseSpace(2), 3, 5, 3);
  const auto j = to_json(a);
  const auto back = expansion_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == a);
  CHECK(j.at("coeffs").size() == 4);
}
