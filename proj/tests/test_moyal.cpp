#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

#include "psido/moyal.hpp"

using namespace psido;
using testing_support::point;
using testing_support::random_expansion;
using testing_support::random_poly;

namespace {

const PhaseSpace P1(1);
PolySymbol X() { return PolySymbol::x(P1, 0); }
PolySymbol XI() { return PolySymbol::xi(P1, 0); }
HExpansion H0(const PolySymbol& p, int k) { return HExpansion::principal(p, k); }

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// n = 1 Moyal product from the binomial expansion of
// (1/k!) (i/2)^k (d_x^a d_xi^b - d_xi^a d_x^b)^k.
HExpansion oracle_star_1d(const HExpansion& a, const HExpansion& b, int K) {
  HExpansion out(P1, 0, K);
  for (int j = 0; j <= K; ++j) {
    PolySymbol acc(P1);
    for (int i = 0; i <= j; ++i)
      for (int l = 0; i + l <= j; ++l) {
        const int k = j - i - l;
        double fact = 1.0;
        for (int m = 2; m <= k; ++m) fact *= m;
        const Complex pref = std::pow(Complex(0.0, 0.5), k) / fact;
        for (int s = 0; s <= k; ++s) {
          const double sign = (s % 2) ? -1.0 : 1.0;
          const PolySymbol da = a.coeff(i).derivative(0, k - s).derivative(1, s);
          const PolySymbol db = b.coeff(l).derivative(0, s).derivative(1, k - s);
          acc += (da * db) * (pref * binom(k, s) * sign);
        }
      }
    out.set_coeff(j, acc);
  }
  return out;
}

double diff(const HExpansion& a, const HExpansion& b) { return (a - b).max_abs(); }

}  // namespace

TEST_CASE("x # xi = x xi + ih/2") {
  const StarContext ctx(P1, 3);
  const HExpansion r = star(H0(X(), 3), H0(XI(), 3), ctx);
  CHECK(r.coeff(0) == X() * XI());
  CHECK(r.coeff(1) == PolySymbol::constant(P1, Complex(0.0, 0.5)));
  CHECK(r.coeff(2).is_zero());
  CHECK(r.coeff(3).is_zero());
}

TEST_CASE("x # xi matches the symmetrized Weyl product acting on functions") {
  // Operators on polynomials u(x): X u = x u, Xi u = (h/i) u'. With the
  // left-hand side Op(x) Op(xi) u = x (h/i) u', and the right-hand side
  // Op(x xi) = (X Xi + Xi X)/2 plus (ih/2) u.
  const double h = 0.37;
  const PhaseSpace ps(1);
  const PolySymbol u = PolySymbol::x(ps, 0).pow(3) + PolySymbol::x(ps, 0) * Complex(2.0, 1.0);
  auto Xop = [&](const PolySymbol& f) { return PolySymbol::x(ps, 0) * f; };
  auto Xiop = [&](const PolySymbol& f) { return f.derivative(0) * Complex(0.0, -h); };
  const PolySymbol lhs = Xop(Xiop(u));
  const StarContext ctx(P1, 2);
  const HExpansion s = star(H0(X(), 2), H0(XI(), 2), ctx);
  const Complex c1 = s.coeff(1).constant_term();
  const PolySymbol rhs = (Xop(Xiop(u)) + Xiop(Xop(u))) * Complex(0.5) + u * (c1 * h);
  CHECK(max_coeff_diff(lhs, rhs) < 1e-14);
}

TEST_CASE("unit and function products") {
  std::mt19937_64 rng(1);
  const StarContext ctx(PhaseSpace(2), 3);
  const auto a = random_expansion(rng, PhaseSpace(2), 4, 6, 3);
  const auto one = HExpansion::constant(PhaseSpace(2), 1.0, 3);
  CHECK(star(one, a, ctx) == a);
  CHECK(star(a, one, ctx) == a);
  const StarContext c1(P1, 2);
  const auto f = H0(X().pow(3) + X(), 2);
  const auto g = H0(X().pow(2) * Complex(0.0, 2.0), 2);
  CHECK(star(f, g, c1) == H0(f.coeff(0) * g.coeff(0), 2));
}

TEST_CASE("star agrees with the binomial oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 12; ++trial) {
    const int K = 1 + trial % 4;
    const StarContext ctx(P1, K);
    const auto a = random_expansion(rng, P1, 5, 5, K);
    const auto b = random_expansion(rng, P1, 5, 5, K);
    CHECK(diff(star(a, b, ctx), oracle_star_1d(a, b, K)) < 1e-12);
  }
}

TEST_CASE("star respects truncation and order") {
  const StarContext ctx(P1, 3);
  const HExpansion a = H0(X(), 2);
  CHECK_THROWS_AS(star(a, H0(XI(), 3), ctx), TruncationError);
  HExpansion neg(P1, 1, 2);
  neg.set_coeff(-1, XI());
  const StarContext c2(P1, 2);
  const HExpansion r = star(neg, H0(X(), 3), c2);
  CHECK(r.order() == 1);
  CHECK(r.coeff(-1) == X() * XI());
  CHECK(r.coeff(0) == PolySymbol::constant(P1, Complex(0.0, -0.5)));
}

TEST_CASE("scaled commutator examples") {
  const StarContext ctx(P1, 4);
  const HExpansion c = star_commutator_scaled(H0(X(), 4), H0(XI(), 4), ctx);
  CHECK(c.coeff(0) == PolySymbol::constant(P1, -1.0));
  for (int j = 1; j <= 3; ++j) CHECK(c.coeff(j).is_zero());
  const HExpansion a = H0(X() * XI() + X().pow(3), 4);
  CHECK(star_commutator_scaled(a, a, ctx).max_abs() == 0.0);
  const HExpansion q = star_commutator_scaled(H0(X().pow(2), 4), H0(XI().pow(2), 4), ctx);
  CHECK(q.coeff(0) == X() * XI() * Complex(-4.0));
  for (int j = 1; j <= 3; ++j) CHECK(q.coeff(j).is_zero());
}

TEST_CASE("scaled commutator principal part is the bracket, odd powers vanish") {
  std::mt19937_64 rng(4);
  for (int n = 1; n <= 2; ++n) {
    const PhaseSpace ps(n);
    const StarContext ctx(ps, 4);
    for (int trial = 0; trial < 8; ++trial) {
      const auto a = H0(random_poly(rng, ps, 4, 5, true), 4);
      const auto b = H0(random_poly(rng, ps, 4, 5, true), 4);
      const auto c = star_commutator_scaled(a, b, ctx);
      CHECK(max_coeff_diff(c.coeff(0), poisson_bracket(a.coeff(0), b.coeff(0))) < 1e-12);
      CHECK(c.coeff(1).max_abs_coefficient() < 1e-12);
      CHECK(c.coeff(3).max_abs_coefficient() < 1e-12);
      const auto raw = star_commutator(a, b, ctx);
      CHECK(raw.coeff(2).max_abs_coefficient() < 1e-12);
      CHECK(raw.coeff(4).max_abs_coefficient() < 1e-12);
    }
  }
}

TEST_CASE("associativity through K") {
  std::mt19937_64 rng(8);
  for (int n = 1; n <= 2; ++n) {
    const PhaseSpace ps(n);
    const StarContext ctx(ps, 3);
    for (int trial = 0; trial < 6; ++trial) {
      const auto a = random_expansion(rng, ps, 4, 4, 3);
      const auto b = random_expansion(rng, ps, 4, 4, 3);
      const auto c = random_expansion(rng, ps, 4, 4, 3);
      const auto l = star(star(a, b, ctx), c, ctx);
      const auto r = star(a, star(b, c, ctx), ctx);
      CHECK(diff(l, r) < 1e-10 * (1.0 + l.max_abs()));
    }
  }
}

TEST_CASE("star inverse") {
  const int K = 4;
  const StarContext ctx(P1, K);
  const Region reg = Region::ball(point({0.0, 0.0}), 1.0);
  const auto half = star_inverse(HExpansion::constant(P1, 2.0, K), reg, ctx);
  CHECK(half == HExpansion::constant(P1, 0.5, K));
  // 1 + h x: geometric series in (-h x).
  const auto a = HExpansion::from_coeffs({PolySymbol::constant(P1, 1.0), X()}, K);
  const auto b = star_inverse(a, reg, ctx);
  for (int j = 0; j <= K; ++j) CHECK(max_coeff_diff(b.coeff(j), X().pow(j) * std::pow(-1.0, j)) < 1e-14);
  const auto one = HExpansion::constant(P1, 1.0, K);
  CHECK(diff(star(a, b, ctx), one) < 1e-14);
  CHECK(diff(star(b, a, ctx), one) < 1e-14);
  CHECK_THROWS_AS(star_inverse(H0(X(), K), reg, ctx), NotEllipticError);
  const Region far = Region::ball(point({3.0, 0.0}), 1.0);
  CHECK_THROWS_AS(star_inverse(H0(X(), K), far, ctx), NotPolynomialError);
}

TEST_CASE("conjugation by constants is trivial") {
  std::mt19937_64 rng(6);
  const StarContext ctx(P1, 3);
  const Region reg = Region::ball(point({0.0, 0.0}), 1.0);
  const auto p = random_expansion(rng, P1, 4, 4, 3);
  CHECK(diff(conjugate_symbol(p, HExpansion::constant(P1, 1.0, 3), reg, ctx), p) < 1e-14);
  CHECK(diff(conjugate_symbol(p, HExpansion::constant(P1, Complex(2.0, -3.0), 3), reg, ctx), p) < 1e-13);
}

TEST_CASE("conjugation by exp(-ix) shifts xi by -h") {
  const int K = 3;
  const StarContext ctx(P1, K);
  // Exact phase-amplitude backend.
  const PhasedExpansion b = star_exp_i(X() * Complex(-1.0), ctx);
  CHECK(b.amplitude == HExpansion::constant(P1, 1.0, K));
  const PhasedExpansion r =
      star(star(star_inverse(b, ctx), PhasedExpansion::plain(H0(XI(), K)), ctx), b, ctx);
  CHECK_FALSE(r.has_phase());
  CHECK(r.amplitude.coeff(0) == XI());
  CHECK(r.amplitude.coeff(1) == PolySymbol::constant(P1, -1.0));
  CHECK(r.amplitude.coeff(2).is_zero());

  // Sampled backend.
  const UniformGrid grid = UniformGrid::around(point({0.0, 0.0}), 1.0, 161);
  const auto bs = SampledExpansion::from_function(
      P1, grid, [](const Point& q) { return std::exp(Complex(0.0, -q[0])); }, K);
  const auto ps = SampledExpansion::from_poly(H0(XI(), K), grid);
  const auto rs = conjugate_symbol(ps, bs, ctx);
  const auto nodes = grid.interior(8);
  CHECK((rs.coeff(0) - ps.coeff(0)).max_abs(nodes) < 1e-8);
  SampledSymbol target = SampledSymbol::zeros(grid);
  for (auto& v : target.values) v = -1.0;
  CHECK((rs.coeff(1) - target).max_abs(nodes) < 1e-8);
  CHECK(rs.coeff(2).max_abs(nodes) < 1e-8);
}

TEST_CASE("conjugation preserves the principal symbol (sampled)") {
  const int K = 2;
  const StarContext ctx(P1, K);
  const UniformGrid grid = UniformGrid::around(point({0.0, 0.0}), 1.0, 121);
  const auto bs = SampledExpansion::from_function(
      P1, grid, [](const Point& q) { return Complex(2.0 + std::sin(q[0]) * std::cos(q[1]), 0.3 * q[1]); }, K);
  const auto ps = SampledExpansion::from_poly(H0(X().pow(2) + XI() * X(), K), grid);
  const auto rs = conjugate_symbol(ps, bs, ctx);
  CHECK((rs.coeff(0) - ps.coeff(0)).max_abs(grid.interior(8)) < 1e-9);
}

TEST_CASE("adjoint exponential of x on xi") {
  const int K = 3;
  const StarContext ctx(P1, K);
  // exp(i ad_x)(xi) = xi + i [x, xi]_# = xi - h.
  const auto r = adjoint_exp(H0(X(), K), H0(XI(), K), Complex(0.0, 1.0), ctx);
  CHECK(r.coeff(0) == XI());
  CHECK(r.coeff(1) == PolySymbol::constant(P1, -1.0));
  CHECK(r.coeff(2).is_zero());
}

TEST_CASE("adjoint exponential equals explicit conjugation for O(h) generators") {
  std::mt19937_64 rng(12);
  const int K = 4;
  const StarContext ctx(P1, K);
  for (int trial = 0; trial < 4; ++trial) {
    const auto f = H0(random_poly(rng, P1, 3, 4, true), K - 1).times_h_power(1);
    const auto p = random_expansion(rng, P1, 3, 4, K);
    const auto e_plus = star_exp_i(f, ctx);
    const auto e_minus = star_exp_i(-f, ctx);
    CHECK(diff(star(e_plus, e_minus, ctx), HExpansion::constant(P1, 1.0, K)) < 1e-12);
    const auto direct = star(star(e_plus, p, ctx), e_minus, ctx);
    CHECK(diff(adjoint_exp(f, p, Complex(0.0, 1.0), ctx), direct) < 1e-10 * (1.0 + direct.max_abs()));
  }
}

TEST_CASE("exact star exponential matches the Mehler formula") {
  // exp_#(i s H) with H = (x^2 + xi^2)/2 has Weyl symbol
  // sec(s h / 2) exp((2i/h) tan(s h / 2) H).
  const int K = 6;
  const StarContext ctx(P1, K);
  const double s = 0.6;
  const PolySymbol H = (X().pow(2) + XI().pow(2)) * Complex(0.5);
  const PhasedExpansion e = star_exp_i(H * Complex(s), ctx);
  const Point rho = point({0.4, -0.7});
  const double Hv = H.evaluate(rho).real();
  std::vector<double> errs;
  for (double h : {0.2, 0.1, 0.05}) {
    const Complex exact = std::exp(Complex(0.0, 2.0 / h * std::tan(s * h / 2) * Hv)) / std::cos(s * h / 2);
    errs.push_back(std::abs(e.evaluate(rho, h) - exact));
  }
  CHECK(errs[0] < 1e-6);
  // Error should fall like h^{K+1} (odd orders vanish, so at least h^8).
  CHECK(errs[1] < errs[0] / 60.0);
}

TEST_CASE("exact star exponential solves the group law") {
  const int K = 4;
  const StarContext ctx(P1, K);
  const PolySymbol f = X() * XI() + X().pow(3) * Complex(0.2);
  const PhasedExpansion e1 = star_exp_i(f, ctx);
  const PhasedExpansion e2 = star_exp_i(f * Complex(2.0), ctx);
  const PhasedExpansion sq = star(e1, e1, ctx);
  CHECK(max_coeff_diff(sq.phase, e2.phase) < 1e-14);
  CHECK(diff(sq.amplitude, e2.amplitude) < 1e-10 * (1.0 + e2.amplitude.max_abs()));
  const PhasedExpansion inv = star_inverse(e1, ctx);
  const PhasedExpansion id = star(e1, inv, ctx);
  CHECK_FALSE(id.has_phase());
  CHECK(diff(id.amplitude, HExpansion::constant(P1, 1.0, K)) < 1e-10);
}
