#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

#include "psido/flow.hpp"

using namespace psido;
using testing_support::point;

namespace {

const PhaseSpace P1(1);
PolySymbol X() { return PolySymbol::x(P1, 0); }
PolySymbol XI() { return PolySymbol::xi(P1, 0); }

std::vector<Point> probe_points() {
  std::vector<Point> pts;
  for (double a : {-0.8, -0.1, 0.5})
    for (double b : {-0.6, 0.2, 0.9}) pts.push_back(point({a, b}));
  return pts;
}

}  // namespace

TEST_CASE("zero hamiltonian gives the identity") {
  const auto k = SymplecticMap::flow(HamiltonianPath::autonomous(PolySymbol(P1)), 10);
  for (const auto& p : probe_points()) {
    const auto [q, J] = k.apply(p);
    CHECK((q - p).norm() == 0.0);
    CHECK((J - Matrix::Identity(2, 2)).norm() == 0.0);
  }
}

TEST_CASE("harmonic oscillator flow is a rotation") {
  const double theta = 1.3;
  const auto path = HamiltonianPath::autonomous((X().pow(2) + XI().pow(2)) * Complex(0.5), theta);
  const auto k = SymplecticMap::flow(path, 10000);
  for (const auto& p : probe_points()) {
    // x' = xi, xi' = -x.
    const Point exact = point({p[0] * std::cos(theta) + p[1] * std::sin(theta),
                               -p[0] * std::sin(theta) + p[1] * std::cos(theta)});
    const auto [q, J] = k.apply(p);
    CHECK((q - exact).norm() <= 1e-8);
    Matrix R(2, 2);
    R << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    CHECK((J - R).norm() <= 1e-8);
  }
}

TEST_CASE("x xi generates hyperbolic scaling") {
  const double t = 0.7;
  const auto k = SymplecticMap::flow(HamiltonianPath::autonomous(X() * XI(), t), 10000);
  for (const auto& p : probe_points()) {
    const Point exact = point({std::exp(t) * p[0], std::exp(-t) * p[1]});
    CHECK((k(p) - exact).norm() <= 1e-8);
  }
}

TEST_CASE("symplectic defect examples") {
  const auto pts = probe_points();
  CHECK(check_symplectic(SymplecticMap::identity(2), pts) == 0.0);
  Matrix S(2, 2);
  S << 2.0, 3.0, 1.0, 2.0;  // det 1
  CHECK(check_symplectic(SymplecticMap::linear(S), pts) < 1e-14);
  CHECK(check_symplectic(SymplecticMap::linear(2.0 * Matrix::Identity(2, 2)), pts) == doctest::Approx(3.0));
  const Region r = Region::ball(point({0.0, 0.0}), 0.5);
  CHECK_THROWS_AS(check_symplectic(SymplecticMap::identity(2).with_domain(r), {point({2.0, 0.0})}), DomainError);
}

TEST_CASE("nonlinear flows stay symplectic and invert") {
  const PhaseSpace P2(2);
  const PolySymbol q = PolySymbol::x(P2, 0).pow(2) * PolySymbol::xi(P2, 1) * Complex(0.3) +
                       PolySymbol::xi(P2, 0).pow(2) * Complex(0.5) + PolySymbol::x(P2, 1).pow(3) * Complex(0.2);
  HamiltonianPath path = HamiltonianPath::autonomous(q, 0.5);
  path.terms.push_back({PolySymbol::x(P2, 0) * PolySymbol::x(P2, 1), TimeProfile{{0.0, 1.0}}});
  const auto k = SymplecticMap::flow(path, 2000);
  std::vector<Point> pts{point({0.1, 0.2, -0.3, 0.4}), point({-0.5, 0.1, 0.2, 0.0})};
  CHECK(check_symplectic(k, pts) < 1e-10);
  const auto back = k.inverse().compose(k);
  for (const auto& p : pts) CHECK((back(p) - p).norm() < 1e-10);
}

TEST_CASE("trig hamiltonian flow") {
  const TrigSymbol q = TrigSymbol::cos_x(0.05) + TrigSymbol::cos_xi(0.05);
  const auto k = SymplecticMap::flow(HamiltonianPath::autonomous(q), 512);
  CHECK(check_symplectic(k, {point({0.1, 0.3}), point({0.7, 0.2})}) < 1e-11);
  // Periodicity: the map commutes with integer translations.
  const Point a = k(point({0.1, 0.3}));
  const Point b = k(point({1.1, -0.7}));
  CHECK((b - a - point({1.0, -1.0})).norm() < 1e-12);
}

TEST_CASE("pullback examples") {
  CHECK(pullback(X() * XI() + X(), SymplecticMap::identity(2)) == X() * XI() + X());
  // Quarter turn of the oscillator flow sends x to xi.
  Matrix R(2, 2);
  R << 0.0, 1.0, -1.0, 0.0;
  const PolySymbol px = pullback(X(), SymplecticMap::linear(R));
  CHECK(px == XI());
  const auto flowed = SymplecticMap::flow(
      HamiltonianPath::autonomous((X().pow(2) + XI().pow(2)) * Complex(0.5), std::numbers::pi / 2), 4000);
  for (const auto& p : probe_points()) CHECK(std::abs(px.evaluate(p) - flowed(p)[0]) < 1e-6);
}

TEST_CASE("pullback is a Poisson morphism") {
  std::mt19937_64 rng(1);
  Matrix S(2, 2);
  S << 1.0, 0.5, -0.4, 0.8;
  S.row(1) /= S.determinant();
  const auto k = SymplecticMap::linear(S, point({0.2, -0.1}));
  for (int trial = 0; trial < 5; ++trial) {
    const PolySymbol a = testing_support::random_poly(rng, P1, 3, 4, true);
    const PolySymbol b = testing_support::random_poly(rng, P1, 3, 4, true);
    CHECK(max_coeff_diff(poisson_bracket(pullback(a, k), pullback(b, k)), pullback(poisson_bracket(a, b), k)) < 1e-12);
    CHECK(max_coeff_diff(pullback(a * b, k), pullback(a, k) * pullback(b, k)) < 1e-12);
  }
  // Sampled Poisson compatibility for a nonlinear flow.
  const PolySymbol q = X().pow(3) * Complex(0.2) + XI().pow(2) * Complex(0.5);
  const auto kf = SymplecticMap::flow(HamiltonianPath::autonomous(q, 0.4), 4000);
  const PolySymbol a = X() * XI();
  const PolySymbol b = X().pow(2) + XI();
  for (const auto& p : probe_points()) {
    const auto [y, J] = kf.apply(p);
    auto grad = [&](const PolySymbol& f) {
      Point g(2);
      g << f.derivative(0).evaluate(y).real(), f.derivative(1).evaluate(y).real();
      return Point(J.transpose() * g);
    };
    const Point ga = grad(a), gb = grad(b);
    const double lhs = ga[1] * gb[0] - ga[0] * gb[1];
    CHECK(std::abs(lhs - poisson_bracket(a, b).evaluate(y).real()) <= 1e-8);
  }
}

TEST_CASE("trig pullback through integer maps") {
  Eigen::Matrix2i L;
  L << 2, 1, 1, 1;
  const TrigSymbol a = TrigSymbol::exponential(1, 0) + TrigSymbol::cosine(0, 1, 0.5);
  const TrigSymbol pa = pullback(a, L);
  const auto k = SymplecticMap::torus_linear(L);
  for (const auto& p : probe_points()) CHECK(std::abs(pa.evaluate(p) - a.evaluate(k(p))) < 1e-12);
}

TEST_CASE("matrix log path reproduces a linear map") {
  Matrix M(2, 2);
  M << 2.0, 1.0, 1.0, 1.0;
  const auto k = SymplecticMap::flow(path_from_linear(M), 8000);
  for (const auto& p : probe_points()) CHECK((k(p) - M * p).norm() < 1e-7);
  Matrix bad(2, 2);
  bad << -1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(path_from_linear(bad), DomainError);
}

TEST_CASE("blow-up is reported") {
  const auto k = SymplecticMap::flow(HamiltonianPath::autonomous(X().pow(2) * XI(), 30.0), 50);
  CHECK_THROWS_AS(k(point({2.0, 3.0})), BlowUpError);
}

TEST_CASE("map dump records jacobians") {
  const auto j = map_dump(SymplecticMap::identity(2), {point({0.5, 0.25})});
  CHECK(j.size() == 1);
  CHECK(j[0]["out"][1].get<double>() == 0.25);
  CHECK(j[0]["jacobian"][0][0].get<double>() == 1.0);
}
