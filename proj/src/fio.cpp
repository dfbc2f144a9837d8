#include "psido/fio.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace psido {

namespace {

const Complex kI(0.0, 1.0);

CMatrix hermitian_exp(const CMatrix& Q, double scale) {
  // exp(-i scale Q) for Hermitian Q.
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (Q + Q.adjoint()));
  const Eigen::VectorXcd phases = (-kI * scale * es.eigenvalues().cast<Complex>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

TrigSymbol trig_term(const HamiltonianSymbol& s) {
  if (const auto* t = std::get_if<TrigSymbol>(&s)) return *t;
  throw DomainError("torus propagation needs trigonometric Hamiltonians");
}

}  // namespace

double FIOPropagator::unitarity_defect() const {
  return spectral_norm(matrix.adjoint() * matrix - CMatrix::Identity(N(), N()));
}

CMatrix unitary_exp(const TrigSymbol& q, const TorusGrid& grid, double t) {
  if (!q.is_real(1e-12)) throw DomainError("Hamiltonian must be a real symbol");
  return hermitian_exp(weyl_quantize(q, grid).matrix, t / grid.h());
}

FIOPropagator propagate(const HamiltonianPath& path, const TorusGrid& grid, int steps, const CMatrix& initial) {
  if (steps < 1) throw ResolutionError("propagation needs at least one step");
  const double dt = (path.t1 - path.t0) / steps;
  if (!(std::abs(dt) > 1e-12)) throw ResolutionError("time step underflow");
  const int N = grid.N;
  FIOPropagator F{grid, initial.size() == 0 ? CMatrix(CMatrix::Identity(N, N)) : initial, "transport"};
  if (F.matrix.rows() != N || F.matrix.cols() != N) throw DimensionError("initial operator has the wrong size");
  std::vector<CMatrix> Q;
  for (const auto& term : path.terms) {
    const TrigSymbol q = trig_term(term.symbol);
    if (!q.is_real(1e-12)) throw DomainError("Hamiltonian must be a real symbol");
    Q.push_back(weyl_quantize(q, grid).matrix);
  }
  if (Q.size() == 1) {
    // Steps commute: a single diagonalization serves all of them.
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (Q[0] + Q[0].adjoint()));
    Eigen::VectorXcd phase = Eigen::VectorXcd::Ones(N);
    for (int s = 0; s < steps; ++s) {
      const double w = path.terms[0].profile.integral(path.t0 + s * dt, path.t0 + (s + 1) * dt);
      phase = phase.cwiseProduct((-kI * (w / grid.h()) * es.eigenvalues().cast<Complex>()).array().exp().matrix());
    }
    F.matrix = F.matrix * es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    return F;
  }
  for (int s = 0; s < steps; ++s) {
    const double a = path.t0 + s * dt, b = a + dt;
    CMatrix avg = CMatrix::Zero(N, N);
    for (std::size_t k = 0; k < Q.size(); ++k) avg += path.terms[k].profile.integral(a, b) * Q[k];
    F.matrix = F.matrix * hermitian_exp(avg, 1.0 / grid.h());
  }
  return F;
}

bool cat_quantizable(const Eigen::Matrix2i& L, int N) {
  if (N % 2 == 0) return true;
  return (L(0, 0) * L(1, 0)) % 2 == 0 && (L(0, 1) * L(1, 1)) % 2 == 0;
}

FIOPropagator metaplectic_cat(const Eigen::Matrix2i& L, const TorusGrid& grid) {
  if (L.determinant() != 1) throw NotSymplecticError("cat map must have determinant 1");
  const int N = grid.N;
  if (!cat_quantizable(L, N))
    throw ConventionError("cat map with odd diagonal-column products needs even N in this convention");
  // F = sum_j T_j X T_{Lj}^*, which intertwines T_k F = F T_{Lk}. With
  // X = e_r e_r^T each term is rank one: T_{(m,n)} e_r = e^{-i pi m n/N}
  // e^{2 pi i m (r' + n)/N} e_{r'} with r' = r - n mod N.
  auto image = [N](long m, long n, int r) {
    const long row = ((r - n) % N + N) % N;
    const double ph = -std::numbers::pi * double((m * n) % (2L * N)) / N +
                      2.0 * std::numbers::pi * double((m * (row + n)) % N) / N;
    return std::make_pair(static_cast<int>(row), std::exp(kI * ph));
  };
  for (int r = 0; r < N; ++r) {
    CMatrix F = CMatrix::Zero(N, N);
    for (long m = 0; m < N; ++m)
      for (long n = 0; n < N; ++n) {
        const long lm = L(0, 0) * m + L(0, 1) * n;
        const long ln = L(1, 0) * m + L(1, 1) * n;
        const auto [i, a] = image(m, n, r);
        const auto [j, b] = image(lm, ln, r);
        F(i, j) += a * std::conj(b);
      }
    const double lambda = (F.adjoint() * F)(0, 0).real();
    if (lambda < 1e-8 * N) continue;
    F /= std::sqrt(lambda);
    FIOPropagator out{grid, F, "metaplectic"};
    if (out.unitarity_defect() > 1e-9) throw InconclusiveError("group average failed to produce a unitary");
    return out;
  }
  throw InconclusiveError("group average vanished for every rank-one seed");
}

TrigSymbol pullback_trig(const TrigSymbol& a, const SymplecticMap& kappa, int band, int samples) {
  return trig_from_function(
      [&](double x, double xi) {
        Point p(2);
        p << x, xi;
        return a.evaluate(kappa(p));
      },
      band, samples);
}

double egorov_residual(const FIOPropagator& F, const TrigSymbol& a, const TrigSymbol& pulled_back) {
  const CMatrix lhs = F.matrix.adjoint() * weyl_quantize(a, F.grid).matrix * F.matrix;
  return spectral_norm(lhs - weyl_quantize(pulled_back, F.grid).matrix);
}

double egorov_residual(const FIOPropagator& F, const TrigSymbol& a, const SymplecticMap& kappa, int band,
                       int samples) {
  if (kappa.kind() == MapKind::Linear && kappa.label() == "torus_linear") {
    const Eigen::Matrix2i L = kappa.matrix().transpose().array().round().cast<int>();
    return egorov_residual(F, a, pullback(a, L));
  }
  return egorov_residual(F, a, pullback_trig(a, kappa, band, samples));
}

CMatrix quantize_cutoff(const TorusFunction& chi, const TorusGrid& grid) {
  return quantize_function(
             [&](double x, double xi) {
               Point p(2);
               p << x, xi;
               return Complex(chi(p));
             },
             grid)
      .matrix;
}

double cross_term_check(const FIOPropagator& F1, const FIOPropagator& F2, const TorusFunction& chi) {
  if (!(F1.grid == F2.grid)) throw DimensionError("propagators live on different grids");
  const int N = F1.N();
  const CMatrix C = quantize_cutoff(chi, F1.grid);
  return spectral_norm(C * (F1.matrix * F2.matrix.adjoint() - CMatrix::Identity(N, N)) * C);
}

GlueResult glue_two_charts(const FIOPropagator& F1, const FIOPropagator& F2, const TorusFunction& chi1,
                           const TorusFunction& chi2, const TorusFunction& chi_inner, double partition_tol) {
  if (!(F1.grid == F2.grid)) throw DimensionError("propagators live on different grids");
  const TorusGrid& g = F1.grid;
  const int N = g.N;
  GlueResult out;
  const int M = 128;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      Point p(2);
      p << double(i) / M, double(j) / M;
      if (chi_inner(p) > 0.0) out.partition_defect = std::max(out.partition_defect, std::abs(chi1(p) + chi2(p) - 1.0));
    }
  if (out.partition_defect > partition_tol)
    throw PartitionError("chi1 + chi2 differs from 1 on the inner region by " + std::to_string(out.partition_defect));
  out.F = F1.matrix * quantize_cutoff(chi1, g) + F2.matrix * quantize_cutoff(chi2, g);
  const CMatrix C = quantize_cutoff(chi_inner, g);
  out.inverse_defect = spectral_norm(C * (out.F.adjoint() * out.F - CMatrix::Identity(N, N)) * C);
  return out;
}

double sandwiched_egorov(const CMatrix& F, const TrigSymbol& a, const TrigSymbol& pulled_back,
                         const TorusFunction& chi, const TorusGrid& grid) {
  const CMatrix C = quantize_cutoff(chi, grid);
  const CMatrix D = F.adjoint() * weyl_quantize(a, grid).matrix * F - weyl_quantize(pulled_back, grid).matrix;
  return spectral_norm(C * D * C);
}

CMatrix align_phase(const CMatrix& F, const CMatrix& F_ref) {
  const Complex tr = (F_ref.adjoint() * F).trace();
  if (std::abs(tr) == 0.0) return F;
  return F * (std::conj(tr) / std::abs(tr));
}

}  // namespace psido
