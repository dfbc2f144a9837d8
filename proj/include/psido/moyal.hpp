#pragma once

#include "psido/h_expansion.hpp"
#include "psido/sampled.hpp"

namespace psido {

/// Arena for star products: the phase space and the last retained h-power.
struct StarContext {
  PhaseSpace space;
  int trunc = 0;

  StarContext(PhaseSpace s, int k);
};

/// Weyl star product a # b through h^K.
///
/// a # b = sum_k (ih/2)^k / k! A^k(a, b) with
/// A(a, b) = sum_j (d_x_j a d_xi_j b - d_xi_j a d_x_j b), so x # xi = x xi + ih/2.
/// Each a_i, b_j pair contributes to h^{i+j+k}; for polynomials the series
/// terminates. Inputs must be known far enough: a through K - (lowest power
/// of b) and b through K - (lowest power of a), else TruncationError.
HExpansion star(const HExpansion& a, const HExpansion& b, const StarContext& ctx);

/// (i/h)(a # b - b # a). Its h^0 coefficient is {a_0, b_0}; known through K-1.
HExpansion star_commutator_scaled(const HExpansion& a, const HExpansion& b, const StarContext& ctx);

/// Commutator a # b - b # a (no rescaling).
HExpansion star_commutator(const HExpansion& a, const HExpansion& b, const StarContext& ctx);

/// Star inverse of an order-0 symbol. Ellipticity is checked by sampling
/// |a_0| on `region`: min |a_0| must reach eps_rel * max |a_0|.
/// An exact polynomial inverse exists only when a_0 is a nonzero constant;
/// otherwise NotPolynomialError is raised and the sampled overload applies.
HExpansion star_inverse(const HExpansion& a, const Region& region, const StarContext& ctx,
                        double eps_rel = 1e-6);

/// star_inverse(b) # p # b, with the principal-level postcondition
/// (result - p)_1 = H_{i log b_0}(p_0) verified.
HExpansion conjugate_symbol(const HExpansion& p, const HExpansion& b, const Region& region,
                            const StarContext& ctx);

/// exp(s ad_f)(p) = sum_k s^k/k! ad_f^k p with ad_f q = f # q - q # f.
/// Each ad_f raises the h-order by one, so the sum is finite through K.
HExpansion adjoint_exp(const HExpansion& f, const HExpansion& p, Complex s, const StarContext& ctx);

/// exp_#(i f) for f whose lowest h-power is >= 1 (finite power series).
HExpansion star_exp_i(const HExpansion& f, const StarContext& ctx);

// ---------------------------------------------------------------------------
// Phase-amplitude symbols e^{i phi} U with polynomial phi and U.

struct PhasedExpansion {
  PolySymbol phase;
  HExpansion amplitude;

  static PhasedExpansion plain(const HExpansion& a);
  bool has_phase() const { return !phase.is_zero(); }
  Complex evaluate(const Point& rho, double h) const;
  /// Coefficient of h^j sampled at rho (phase factor included).
  Complex coeff_at(int j, const Point& rho) const;
};

PhasedExpansion star(const PhasedExpansion& a, const PhasedExpansion& b, const StarContext& ctx);

/// Inverse e^{-i phi} V; requires the amplitude's h^0 term to be a nonzero constant.
PhasedExpansion star_inverse(const PhasedExpansion& a, const StarContext& ctx);

/// exp_#(i f) for an h-independent polynomial f, computed exactly as
/// e^{i f} U with U polynomial at every order.
PhasedExpansion star_exp_i(const PolySymbol& f, const StarContext& ctx);

// ---------------------------------------------------------------------------
// Sampled backend: coefficients on a uniform grid, 4th-order differences.

SampledExpansion star(const SampledExpansion& a, const SampledExpansion& b, const StarContext& ctx);

/// Sampled star inverse; ellipticity checked over the whole grid.
SampledExpansion star_inverse(const SampledExpansion& a, const StarContext& ctx, double eps_rel = 1e-6);

/// Sampled conjugation star_inverse(b) # p # b. The principal-level
/// postcondition is checked on nodes at least `margin` nodes from the faces.
SampledExpansion conjugate_symbol(const SampledExpansion& p, const SampledExpansion& b,
                                  const StarContext& ctx, int margin = 8);

}  // namespace psido
