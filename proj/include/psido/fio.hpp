#pragma once

#include <functional>
#include <string>

#include "psido/flow.hpp"
#include "psido/torus.hpp"

namespace psido {

/// Unitary N x N matrix quantizing a symplectic map of the torus.
struct FIOPropagator {
  TorusGrid grid;
  CMatrix matrix;
  std::string provenance;  // "metaplectic" or "transport"

  int N() const { return grid.N; }
  double unitarity_defect() const;
};

/// Solves F'(t) = -(i/h) F(t) Q(t), F(t0) = initial (identity when empty).
/// Each step multiplies by exp(-(i/h) Qbar dt) where Qbar is the exact step
/// average of q_t (time profiles are polynomials), so paths of the form
/// f(t) q are integrated without time-discretization error.
FIOPropagator propagate(const HamiltonianPath& path, const TorusGrid& grid, int steps,
                        const CMatrix& initial = CMatrix());

/// exp(-(i/h) Op(q)) for a real trig symbol q.
CMatrix unitary_exp(const TrigSymbol& q, const TorusGrid& grid, double t = 1.0);

/// Whether the quantized cat map exists for L on the N-torus: N even, or
/// both products L00*L10 and L01*L11 even.
bool cat_quantizable(const Eigen::Matrix2i& L, int N);

/// Unitary F with F^* Op(e_k) F = Op(e_{L k}) for every frequency k.
/// Classical map: rho -> L^T rho mod 1.
FIOPropagator metaplectic_cat(const Eigen::Matrix2i& L, const TorusGrid& grid);

/// Symbol a o kappa as a trig polynomial of bandwidth `band`, from
/// `samples` x `samples` evaluations of kappa.
TrigSymbol pullback_trig(const TrigSymbol& a, const SymplecticMap& kappa, int band, int samples);

/// ||F^* Op(a) F - Op(b)|| for a given pulled-back symbol b.
double egorov_residual(const FIOPropagator& F, const TrigSymbol& a, const TrigSymbol& pulled_back);
/// Same with b = kappa^* a: exact for integer torus maps, sampled otherwise.
double egorov_residual(const FIOPropagator& F, const TrigSymbol& a, const SymplecticMap& kappa, int band = 24,
                       int samples = 64);

using TorusFunction = std::function<double(const Point&)>;

/// Quantization of a real function on the torus (full centered band).
CMatrix quantize_cutoff(const TorusFunction& chi, const TorusGrid& grid);

/// ||Op(chi) (F1 F2^* - I) Op(chi)||.
double cross_term_check(const FIOPropagator& F1, const FIOPropagator& F2, const TorusFunction& chi);

struct GlueResult {
  CMatrix F;
  double inverse_defect = 0.0;    // ||Op(chit)(F^* F - I)Op(chit)||
  double partition_defect = 0.0;  // max |chi1 + chi2 - 1| on supp chit
};

/// F = F1 Op(chi1) + F2 Op(chi2). The partition is checked on a sample grid
/// where chi_inner > 0; a defect above `partition_tol` raises PartitionError.
GlueResult glue_two_charts(const FIOPropagator& F1, const FIOPropagator& F2, const TorusFunction& chi1,
                           const TorusFunction& chi2, const TorusFunction& chi_inner, double partition_tol = 1e-12);

/// ||Op(chi)(F^* Op(a) F - Op(b)) Op(chi)|| for a general (glued) F.
double sandwiched_egorov(const CMatrix& F, const TrigSymbol& a, const TrigSymbol& pulled_back,
                         const TorusFunction& chi, const TorusGrid& grid);

/// F multiplied by the unit scalar maximizing Re tr(F_ref^* F).
CMatrix align_phase(const CMatrix& F, const CMatrix& F_ref);

}  // namespace psido
