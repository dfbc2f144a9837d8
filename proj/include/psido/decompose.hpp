#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psido/flow.hpp"
#include "psido/moyal.hpp"
#include "psido/torus.hpp"

namespace psido {

/// Symbol-level algebra isomorphism g : S(U) -> S(V) acting on truncated
/// h-expansions, together with its inverse.
struct IsomorphismOracle {
  using Map = std::function<HExpansion(const HExpansion&)>;
  Map apply;
  Map apply_inverse;
  Region domain;
  Region codomain;
  PhaseSpace space;
  int trunc = 0;  // outputs are known through h^trunc
  std::string label;
};

IsomorphismOracle identity_oracle(PhaseSpace space, Region region, int trunc);

/// g(p) = B # (p o kappa^{-1}) # B^{-1} with B = b_1^{-1} # ... # b_L^{-1} and
/// b_l = exp_#(-i h^{l-1} f_l). Layer l acts as p -> exp(i h^{l-1} ad_{f_l}) p,
/// so g(p) = p o kappa^{-1} + h {f_1, p o kappa^{-1}} + O(h^2).
/// kappa must be affine (linear with offset) and symplectic; the potentials
/// live on the codomain.
IsomorphismOracle synthesize_oracle(const SymplecticMap& kappa, const std::vector<PolySymbol>& potentials,
                                    const Region& domain, const StarContext& ctx);

/// Pullback oracle p -> p o M^{-1} for any invertible affine M, symplectic or not.
IsomorphismOracle pullback_oracle(const SymplecticMap& M, const Region& domain, int trunc);

/// g composed with p -> (1 + eps h^level) p. Invertible and order preserving,
/// but its level-`level` part is not a derivation.
IsomorphismOracle tampered_oracle(IsomorphismOracle g, int level, double eps);

/// Generator transcript: images of the coordinates under g and g^{-1}.
nlohmann::json oracle_transcript(const IsomorphismOracle& g);
/// Oracle extended from a transcript through z^a = (z_k # z^{a-e_k} + z^{a-e_k} # z_k) / 2.
IsomorphismOracle oracle_from_transcript(const nlohmann::json& j);

nlohmann::json region_to_json(const Region& r);
Region region_from_json(const nlohmann::json& j);

/// Probe set: the coordinates, x_1 xi_1, and `random_count` random real
/// polynomials of degree <= 3 with coefficients in [-1, 1].
std::vector<PolySymbol> probe_symbols(PhaseSpace space, int random_count, std::uint64_t seed);

struct OracleAudit {
  double order_defect = 0.0;          // largest coefficient below h^0 in g(p)
  double inverse_defect = 0.0;        // |g^{-1}(g(p)) - p|
  double unit_defect = 0.0;           // |g(C + p) - C - g(p)|
  double multiplicative_defect = 0.0; // |g(p # q) - g(p) # g(q)|
};

/// Checks order preservation and the inverse on probes; with `full` also
/// unitalization and multiplicativity. Violations above tol raise
/// InconsistentOracleError.
OracleAudit audit_oracle(const IsomorphismOracle& g, const std::vector<PolySymbol>& probes,
                         const StarContext& ctx, double tol = 1e-9, bool full = false);

/// beta(p) = h^{-level} coefficient of g(p) - p. Checks that lower orders
/// vanish and that beta obeys the Leibniz rule for products and Poisson
/// brackets; returns the largest defect or raises NotADerivationError.
double audit_derivation(const IsomorphismOracle& g, int level, const std::vector<PolySymbol>& probes,
                        double tol = 1e-8);

// ---------------------------------------------------------------------------
// Recovery of kappa.

struct KappaRecovery {
  UniformGrid grid;                  // sample nodes in the domain
  std::vector<Point> images;         // kappa at the nodes (inverse-query route)
  std::vector<PolySymbol> forward;   // c, d: coordinates o kappa^{-1}, on V
  std::vector<PolySymbol> backward;  // coordinates o kappa, on U
  double route_disagreement = 0.0;
};

/// Probe grid with `per_axis` nodes per axis inside the domain (the inscribed
/// cube for balls).
UniformGrid domain_grid(const Region& r, int per_axis);

/// kappa at the grid nodes from g^{-1} on the codomain coordinates,
/// cross-checked by Newton inversion of (c, d). Raises InconsistentOracleError
/// when the routes differ by more than tol.
KappaRecovery recover_kappa(const IsomorphismOracle& g, const UniformGrid& grid, double tol = 1e-6);

/// Max over interior nodes of |J Omega J^T - Omega|, J from 4th-order
/// differences of the samples. This is the table of {kappa_a, kappa_b} against
/// the canonical brackets.
double verify_symplectic_recovery(const UniformGrid& grid, const std::vector<Point>& images);

/// Least-squares affine fit; NotPolynomialError when the samples are not affine.
SymplecticMap fit_affine(const UniformGrid& grid, const std::vector<Point>& images, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Reduction and the induction step.

/// g_1(p) = g(p) o kappa. Raises KappaMismatchError when g_1 changes the
/// principal symbol of a probe by more than tol.
IsomorphismOracle reduce_by_fio(const IsomorphismOracle& g, const SymplecticMap& kappa,
                                const std::vector<PolySymbol>& probes, double tol = 1e-8);

struct DerivationSample {
  int level = 1;
  std::vector<PolySymbol> gamma_poly;  // beta(x_j)
  std::vector<PolySymbol> delta_poly;  // beta(xi_j)
  std::vector<SampledSymbol> gamma;
  std::vector<SampledSymbol> delta;
  double closedness_defect = 0.0;
};

/// Reads gamma_j, delta_j off the level-`level` coefficient of g(x_j) - x_j and
/// g(xi_j) - xi_j, samples them on the grid and measures closedness of
/// gamma . dxi - delta . dx by finite differences.
DerivationSample extract_derivation(const IsomorphismOracle& g, int level, const UniformGrid& grid,
                                    double tol = 1e-8);

struct Potential {
  PolySymbol f;                     // f(rho0) = 0
  double rederivative_defect = 0.0; // |d_xi f - gamma| + |d_x f + delta| on the grid
  double quadrature_defect = 0.0;   // exact integral vs adaptive Gauss-Kronrod at spot nodes
};

/// f(rho) = int_0^1 [gamma(rho_t) . (xi - xi0) - delta(rho_t) . (x - x0)] dt along
/// rho_t = rho0 + t (rho - rho0). RegionError when rho0 or a grid node lies
/// outside the region.
Potential integrate_one_form(const DerivationSample& d, const Point& rho0, const Region& region,
                             const UniformGrid& grid, double tol = 1e-8);

/// The same line integral for arbitrary coefficient functions, by adaptive
/// Gauss-Kronrod quadrature with relative tolerance `rel_tol`.
Complex line_integral(const std::function<Point(const Point&)>& gamma,
                      const std::function<Point(const Point&)>& delta, const Point& rho0, const Point& rho,
                      double rel_tol = 1e-10);

/// b_l = exp_#(-i h^{l-1} f).
PhasedExpansion build_corrector(const PolySymbol& f, int level, const StarContext& ctx);

/// p -> b_l # g(p) # b_l^{-1} and its inverse.
IsomorphismOracle conjugate_oracle(const IsomorphismOracle& g, const PolySymbol& f, int level,
                                   const StarContext& ctx);

// ---------------------------------------------------------------------------

struct DecomposeOptions {
  int depth = 1;
  int grid_per_axis = 33;
  int random_probes = 4;
  std::uint64_t probe_seed = 1;
  double kappa_tol = 1e-6;
  double poisson_tol = 1e-6;
  double derivation_tol = 1e-8;
  double residual_tol = 1e-9;
};

struct LevelReport {
  int level = 1;
  double derivation_defect = 0.0;
  double closedness_defect = 0.0;
  PolySymbol f;  // on the domain, f(center) = 0
  double residual_before = 0.0;
  double residual_after = 0.0;
  int leading_before = 0;
  int leading_after = 0;
  double quadrature_defect = 0.0;
};

struct ResidualEntry {
  std::string stage;
  double residual = 0.0;
  int leading_power = 0;
};

struct DecompositionResult {
  SymplecticMap kappa_hat = SymplecticMap::identity(2);
  std::string F = "affine-pullback";
  std::vector<Point> kappa_nodes;
  std::vector<Point> kappa_images;
  double kappa_route_disagreement = 0.0;
  double poisson_defect = 0.0;
  std::vector<LevelReport> levels;
  std::vector<PolySymbol> potentials;  // f_l moved to the codomain
  PhasedExpansion B_symbol;            // g(p) = B # (p o kappa^{-1}) # B^{-1}
  std::vector<ResidualEntry> residual_log;
  double final_certificate = 0.0;
};

/// Full decomposition through depth L. Each failure is rethrown as StageError
/// tagged with the stage name.
DecompositionResult decompose_full(const IsomorphismOracle& g, const DecomposeOptions& opt);

nlohmann::json to_json(const DecompositionResult& r);

// ---------------------------------------------------------------------------
// Operator-level decomposition on the torus.

struct TorusOracle {
  TorusGrid grid;
  std::function<CMatrix(const CMatrix&)> apply;
};

/// g(P) = B F P F^{-1} B^{-1} with F the cat quantization of L and
/// B = Op(exp(i f_1)) Op(exp(i h f_2)) ...
TorusOracle synthesize_torus_oracle(const TorusGrid& grid, const Eigen::Matrix2i& L,
                                    const std::vector<TrigSymbol>& potentials);

/// Integer matrix L read off the dominant frequency of g(Op(e_k)).
Eigen::Matrix2i recover_cat_matrix(const TorusOracle& g);

struct TorusDecomposition {
  Eigen::Matrix2i L;
  std::vector<TrigSymbol> potentials;  // recovered f_l on the torus
  std::vector<double> residuals;       // probe residual after reduction, then after each level
  double principal_defect = 0.0;
};

/// Reduction by the cat quantization followed by `depth` levels of
/// extraction and correction. Potentials are recovered spectrally and pruned
/// below `prune` times their largest coefficient.
TorusDecomposition decompose_torus(const TorusOracle& g, int depth, double prune = 1e-13);

}  // namespace psido
