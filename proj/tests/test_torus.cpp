#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "psido/phase_space.hpp"
#include "psido/torus.hpp"

using namespace psido;

namespace {

const double kPi = std::numbers::pi;

CMatrix mpow(const CMatrix& A, int k) {
  const int N = static_cast<int>(A.rows());
  CMatrix base = k >= 0 ? A : CMatrix(A.adjoint());
  CMatrix out = CMatrix::Identity(N, N);
  for (int i = 0; i < std::abs(k); ++i) out = out * base;
  return out;
}

// e^{i(aX + bXi)} = e^{iaX} e^{ibXi} e^{iab h/2}: clock powers times
// translation by n/N, with the BCH phase e^{i pi m n / N}.
CMatrix oracle_exp(int m, int n, int N) {
  return std::exp(Complex(0.0, kPi * m * n / N)) * mpow(clock_matrix(N), m) * mpow(shift_matrix(N), -n);
}

TrigSymbol random_trig(std::mt19937_64& rng, int band, int terms, bool real) {
  std::uniform_int_distribution<int> f(-band, band);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  TrigSymbol t;
  for (int i = 0; i < terms; ++i) {
    const int m = f(rng), n = f(rng);
    const Complex v(c(rng), c(rng));
    t.add(m, n, v);
    if (real) t.add(-m, -n, std::conj(v));
  }
  return t;
}

}  // namespace

TEST_CASE("grid ties h to N") {
  const TorusGrid g(64);
  CHECK(g.h() * 64 * 2 * kPi == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(TorusGrid(1), DomainError);
}

TEST_CASE("quantization examples") {
  const TorusGrid g(16);
  CHECK((weyl_quantize(TrigSymbol::constant(1.0), g).matrix - CMatrix::Identity(16, 16)).norm() == 0.0);
  const CMatrix C = clock_matrix(16);
  const CMatrix expect = (C + C.adjoint()) / 2.0;
  CHECK((weyl_quantize(TrigSymbol::cos_x(), g).matrix - expect).norm() < 1e-14);
}

TEST_CASE("quantization matches the BCH oracle on exponentials") {
  for (int N : {7, 16}) {
    const TorusGrid g(N);
    for (int m = -3; m <= 3; ++m)
      for (int n = -3; n <= 3; ++n)
        CHECK((weyl_quantize(TrigSymbol::exponential(m, n), g).matrix - oracle_exp(m, n, N)).norm() < 1e-12);
  }
}

TEST_CASE("real symbols quantize to hermitian matrices; linearity; norm bound") {
  std::mt19937_64 rng(3);
  const TorusGrid g(24);
  for (int trial = 0; trial < 10; ++trial) {
    const TrigSymbol a = random_trig(rng, 4, 6, true);
    const TrigSymbol b = random_trig(rng, 4, 6, false);
    const auto A = weyl_quantize(a, g);
    CHECK((A.matrix - A.matrix.adjoint()).norm() < 1e-13);
    const Complex z(0.3, -1.2);
    const CMatrix lin = weyl_quantize(a + b * z, g).matrix - A.matrix - z * weyl_quantize(b, g).matrix;
    CHECK(lin.norm() < 1e-12);
    CHECK(spectral_norm(weyl_quantize(b, g).matrix) <= b.l1_norm() + 1e-12);
  }
}

TEST_CASE("exact star product is exact composition") {
  std::mt19937_64 rng(5);
  const TorusGrid g(20);
  for (int trial = 0; trial < 6; ++trial) {
    const TrigSymbol a = random_trig(rng, 3, 5, false);
    const TrigSymbol b = random_trig(rng, 3, 5, false);
    const CMatrix lhs = weyl_quantize(a, g).matrix * weyl_quantize(b, g).matrix;
    CHECK((lhs - weyl_quantize(trig_star_exact(a, b, g.h()), g).matrix).norm() < 1e-11);
  }
}

TEST_CASE("weyl symbol inverts quantization") {
  std::mt19937_64 rng(9);
  const TorusGrid g(15);
  const TrigSymbol a = random_trig(rng, 5, 8, false);
  const TrigSymbol back = weyl_symbol(weyl_quantize(a, g), 1e-12);
  CHECK((back - a).pruned(1e-12).is_zero());
}

TEST_CASE("compose_vs_star: constants and slopes") {
  const TorusGrid g(32);
  CHECK(compose_vs_star(TrigSymbol::constant(2.0), TrigSymbol::cos_xi(), g, 0) < 1e-13);
  for (int K = 0; K <= 2; ++K) {
    std::vector<double> hs, rs;
    for (int N : {32, 64, 128, 256}) {
      const TorusGrid gn(N);
      hs.push_back(gn.h());
      rs.push_back(compose_vs_star(TrigSymbol::cos_x(), TrigSymbol::cos_xi(), gn, K));
    }
    const SlopeFit fit = fit_slope(hs, rs);
    CHECK(fit.slope == doctest::Approx(K + 1).epsilon(0.3 / (K + 1)));
  }
}

TEST_CASE("residual decreases with K at fixed N") {
  const TorusGrid g(64);
  const TrigSymbol a = TrigSymbol::cosine(1, 1) + TrigSymbol::sine(2, 0, 0.5);
  const TrigSymbol b = TrigSymbol::cos_xi() + TrigSymbol::cosine(1, -1, 0.3);
  double prev = 1e300;
  for (int K = 0; K <= 4; ++K) {
    const double r = compose_vs_star(a, b, g, K);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("microlocal residual examples") {
  const TorusGrid g(32);
  const auto T = weyl_quantize(TrigSymbol::cos_x(), g);
  const auto Z = weyl_quantize(TrigSymbol(), g);
  const auto I = weyl_quantize(TrigSymbol::constant(1.0), g);
  CHECK(microlocal_residual(Z, T, T) == 0.0);
  CHECK(microlocal_residual(T, I, I) == doctest::Approx(spectral_norm(T.matrix)));
  CHECK_THROWS_AS(microlocal_residual(T, weyl_quantize(TrigSymbol::constant(1.0), TorusGrid(16)), I), DimensionError);
}

TEST_CASE("symbols with disjoint supports sandwich to rapidly decaying norms") {
  const Cutoff chi(Point::Constant(2, 0.25), 0.06, 0.16, BumpProfile::SmoothExp, 1.0, true);
  const Cutoff far(Point::Constant(2, 0.75), 0.06, 0.16, BumpProfile::SmoothExp, 1.0, true);
  auto f_chi = [&](double x, double xi) { return Complex(chi(Point{{x, xi}})); };
  auto f_far = [&](double x, double xi) { return Complex(far(Point{{x, xi}})); };
  std::vector<double> hs, rs;
  for (int N : {32, 64, 128}) {
    const TorusGrid gn(N);
    const auto A = quantize_function(f_chi, gn);
    const auto T = quantize_function(f_far, gn);
    hs.push_back(gn.h());
    rs.push_back(microlocal_residual(T, A, A));
  }
  MESSAGE("sandwiched residuals " << rs[0] << " " << rs[1] << " " << rs[2]);
  CHECK(rs[2] < 1e-6);
  CHECK(fit_slope(hs, rs).slope >= 4.0);
}

TEST_CASE("slope fit recovers a power law") {
  const std::vector<double> h{0.1, 0.05, 0.025};
  const std::vector<double> r{3e-3, 3e-3 / 8, 3e-3 / 64};
  CHECK(fit_slope(h, r).slope == doctest::Approx(3.0));
  CHECK_THROWS_AS(fit_slope(h, {1.0, 0.0, 1.0}), InconclusiveError);
}

TEST_CASE("operator json round trip and csv") {
  const auto A = weyl_quantize(TrigSymbol::sine(1, 2), TorusGrid(5));
  const auto B = operator_from_json(nlohmann::json::parse(to_json(A).dump()));
  CHECK(B.matrix == A.matrix);
  const std::string csv = scan_csv({{32, 0.005, 1e-3, ""}}, 2.0);
  CHECK(csv.rfind("N,h,residual,fitted_slope\n", 0) == 0);
}

TEST_CASE("trig symbols from functions and linear composition") {
  const TrigSymbol t = trig_from_function([](double x, double xi) { return Complex(std::cos(2 * kPi * (x + 2 * xi))); }, 3, 16);
  CHECK((t - TrigSymbol::cosine(1, 2)).pruned(1e-13).is_zero());
  Eigen::Matrix2i L;
  L << 2, 1, 1, 1;
  const TrigSymbol e = TrigSymbol::exponential(1, 0).compose_linear(L);
  // a(L rho) with a = e^{2 pi i x}: x' = 2x + xi.
  CHECK(e.coefficient(2, 1) == Complex(1.0));
}

TEST_CASE("function quantization agrees with trig quantization") {
  const TrigSymbol a = TrigSymbol::cosine(3, 2, 0.7) + TrigSymbol::sine(-5, 1) + TrigSymbol::exponential(9, -3, Complex(0.2, 0.1));
  for (int N : {15, 16}) {
    const TorusGrid g(N);
    const auto F = quantize_function([&](double x, double xi) { return a.evaluate(x, xi); }, g);
    CHECK((F.matrix - weyl_quantize(a, g).matrix).norm() < 1e-12);
  }
}
