#include "doctest.h"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "psido/fio.hpp"

using namespace psido;

namespace {

Point pt(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

Eigen::Matrix2i mat(int a, int b, int c, int d) {
  Eigen::Matrix2i L;
  L << a, b, c, d;
  return L;
}

TrigSymbol kick(double eps) { return TrigSymbol::cos_x(eps) + TrigSymbol::cos_xi(eps); }

// Smooth bump on the torus centered at c.
TorusFunction bump(double cx, double cxi, double inner, double outer) {
  const Cutoff c(pt(cx, cxi), inner, outer, BumpProfile::SmoothExp, 1.0, true);
  return [c](const Point& p) { return c(p); };
}

}  // namespace

TEST_CASE("zero hamiltonian propagates to the identity") {
  const TorusGrid g(16);
  const auto F = propagate(HamiltonianPath::autonomous(TrigSymbol()), g, 8);
  CHECK((F.matrix - CMatrix::Identity(16, 16)).norm() < 1e-14);
  CHECK_THROWS_AS(propagate(HamiltonianPath::autonomous(TrigSymbol()), g, 0), ResolutionError);
}

TEST_CASE("autonomous propagation matches the matrix exponential") {
  const TorusGrid g(24);
  const TrigSymbol q = kick(0.02) + TrigSymbol::cosine(1, 1, 0.01);
  const auto F = propagate(HamiltonianPath::autonomous(q), g, 64);
  const CMatrix direct = (CMatrix(-Complex(0.0, 1.0) / g.h() * weyl_quantize(q, g).matrix)).exp();
  CHECK((F.matrix - direct).norm() < 1e-10);
  CHECK(F.unitarity_defect() < 1e-12);
}

TEST_CASE("non-commuting paths stay unitary and reparametrize consistently") {
  const TorusGrid g(32);
  HamiltonianPath p;
  p.terms.push_back({TrigSymbol::cos_x(0.01), TimeProfile::constant(1.0)});
  p.terms.push_back({TrigSymbol::cos_xi(0.01), TimeProfile{{0.0, 1.0}}});
  const auto F = propagate(p, g, 256);
  CHECK(F.unitarity_defect() < 1e-8);
  const auto F2 = propagate(p, g, 512);
  CHECK(spectral_norm(F.matrix - F2.matrix) < 1e-3);
}

TEST_CASE("cat map quantization is exact Egorov") {
  const TorusGrid g(32);
  for (const auto& L : {mat(2, 1, 1, 1), mat(1, 1, 0, 1), mat(1, 0, 2, 1), mat(3, 2, 4, 3)}) {
    const auto F = metaplectic_cat(L, g);
    CHECK(F.unitarity_defect() < 1e-12);
    for (auto [m, n] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{2, -1}}) {
      const Eigen::Vector2i Lk = L * Eigen::Vector2i(m, n);
      const CMatrix lhs = F.matrix.adjoint() * weyl_quantize(TrigSymbol::exponential(m, n), g).matrix * F.matrix;
      CHECK(spectral_norm(lhs - weyl_quantize(TrigSymbol::exponential(Lk[0], Lk[1]), g).matrix) < 1e-10);
    }
    const TrigSymbol a = TrigSymbol::cos_x() + TrigSymbol::sine(1, 1, 0.3);
    CHECK(egorov_residual(F, a, SymplecticMap::torus_linear(L)) < 1e-10);
  }
  const auto Fid = metaplectic_cat(mat(1, 0, 0, 1), g);
  CHECK(spectral_norm(align_phase(Fid.matrix, CMatrix::Identity(32, 32)) - CMatrix::Identity(32, 32)) < 1e-12);
}

TEST_CASE("cat map errors") {
  CHECK_THROWS_AS(metaplectic_cat(mat(2, 1, 1, 2), TorusGrid(8)), NotSymplecticError);
  CHECK_THROWS_AS(metaplectic_cat(mat(2, 1, 1, 1), TorusGrid(9)), ConventionError);
  CHECK_NOTHROW(metaplectic_cat(mat(1, 0, 2, 1), TorusGrid(9)));
}

TEST_CASE("egorov trivial case") {
  const TorusGrid g(16);
  const FIOPropagator F{g, CMatrix::Identity(16, 16), "transport"};
  CHECK(egorov_residual(F, TrigSymbol::cos_x(), SymplecticMap::identity(2)) < 1e-12);
}

TEST_CASE("nonlinear kick: Egorov residual is O(h^2)") {
  const TrigSymbol q = kick(0.02);
  const auto kappa = SymplecticMap::flow(HamiltonianPath::autonomous(q), 1024);
  const TrigSymbol a = TrigSymbol::cos_x() + TrigSymbol::sine(0, 1, 0.5);
  const TrigSymbol b = pullback_trig(a, kappa, 16, 34);
  std::vector<double> hs, rs;
  for (int N : {64, 128, 256}) {
    const TorusGrid g(N);
    const auto F = propagate(HamiltonianPath::autonomous(q), g, 1);
    hs.push_back(g.h());
    rs.push_back(egorov_residual(F, a, b));
  }
  const double slope = fit_slope(hs, rs).slope;
  MESSAGE("egorov residuals " << rs[0] << " " << rs[1] << " " << rs[2] << " slope " << slope);
  CHECK(slope >= 1.7);
  CHECK(slope <= 2.5);
}

TEST_CASE("cross term: same path twice, different reparametrization") {
  const TrigSymbol q = kick(0.02);
  const auto chi = bump(0.25, 0.25, 0.08, 0.2);
  std::vector<double> hs, rs, neg;
  for (int N : {64, 128, 256}) {
    const TorusGrid g(N);
    const auto F1 = propagate(HamiltonianPath::autonomous(q), g, 16);
    HamiltonianPath rp = HamiltonianPath::autonomous(q);
    rp.terms[0].profile = TimeProfile::reparametrized(0.4);
    // Different O(h^2) normalization at t = 0.
    const CMatrix init = unitary_exp(TrigSymbol::cosine(1, 1, 1.0), g, g.h() * g.h() * g.h());
    const auto F2 = propagate(rp, g, 16, init);
    CHECK(cross_term_check(F1, F1, chi) < 1e-12);
    hs.push_back(g.h());
    rs.push_back(cross_term_check(F1, F2, chi));
    const auto F3 = propagate(HamiltonianPath::autonomous(TrigSymbol::cos_x(0.05)), g, 1);
    neg.push_back(cross_term_check(F1, F3, chi));
  }
  const double slope = fit_slope(hs, rs).slope;
  MESSAGE("cross residuals " << rs[0] << " " << rs[1] << " " << rs[2] << " slope " << slope);
  MESSAGE("negative control " << neg[0] << " " << neg[1] << " " << neg[2]);
  CHECK(slope >= 1.7);
  for (double v : neg) CHECK(v > 0.1);
}

TEST_CASE("glued propagators are approximate inverses and satisfy Egorov") {
  const TrigSymbol q = kick(0.02);
  const auto chi1 = bump(0.3, 0.5, 0.1, 0.35);
  const auto big = bump(0.5, 0.5, 0.32, 0.49);
  const TorusFunction chi2 = [=](const Point& p) { return big(p) - chi1(p); };
  const auto inner = bump(0.5, 0.5, 0.1, 0.3);
  const auto kappa = SymplecticMap::flow(HamiltonianPath::autonomous(q), 1024);
  const TrigSymbol a = TrigSymbol::cosine(1, 1) + TrigSymbol::sine(0, 1, 0.5);
  const TrigSymbol b = pullback_trig(a, kappa, 16, 34);
  std::vector<double> hs, inv, eg;
  for (int N : {128, 256, 512}) {
    const TorusGrid g(N);
    const auto F1 = propagate(HamiltonianPath::autonomous(q), g, 1);
    HamiltonianPath rp = HamiltonianPath::autonomous(q);
    rp.terms[0].profile = TimeProfile::reparametrized(-0.3);
    const auto F2 = propagate(rp, g, 8, unitary_exp(TrigSymbol::cosine(0, 1, 1.0), g, std::pow(g.h(), 3)));
    const GlueResult same = glue_two_charts(F1, F1, chi1, chi2, inner);
    CHECK(spectral_norm(same.F - F1.matrix * quantize_cutoff(big, g)) < 1e-12);
    MESSAGE("single-chart defect " << same.inverse_defect);
    const GlueResult glued = glue_two_charts(F1, F2, chi1, chi2, inner);
    hs.push_back(g.h());
    inv.push_back(glued.inverse_defect);
    eg.push_back(sandwiched_egorov(glued.F, a, b, inner, g));
  }
  MESSAGE("glue inverse defects " << inv[0] << " " << inv[1] << " " << inv[2]);
  MESSAGE("glue egorov " << eg[0] << " " << eg[1] << " " << eg[2]);
  CHECK(fit_slope(hs, inv).slope >= 1.7);
  CHECK(fit_slope(hs, eg).slope >= 1.7);
  const TorusFunction wrong = [=](const Point& p) { return 0.5 * chi1(p); };
  CHECK_THROWS_AS(glue_two_charts(propagate(HamiltonianPath::autonomous(q), TorusGrid(16), 1),
                                  propagate(HamiltonianPath::autonomous(q), TorusGrid(16), 1), chi1, wrong, inner),
                  PartitionError);
}
