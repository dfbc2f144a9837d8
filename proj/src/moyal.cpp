#include "psido/moyal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace psido {

StarContext::StarContext(PhaseSpace s, int k) : space(s), trunc(k) {
  if (k < 0) throw TruncationError("star context needs K >= 0");
}

namespace {

// One term of the k-th bidifferential power: left derivative multi-index
// gamma = (alpha | beta) over (x | xi), right multi-index (beta | alpha),
// weight (-1)^{|beta|} / gamma!.
struct BidiffTerm {
  Exponent left;
  Exponent right;
  double weight;
};

std::vector<BidiffTerm> bidiff_terms(int n, int k) {
  std::vector<BidiffTerm> out;
  const int d = 2 * n;
  Exponent g{};
  // Enumerate compositions of k into d parts.
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == d - 1) {
      g[var] = static_cast<std::uint8_t>(remaining);
      BidiffTerm t{g, {}, 1.0};
      int beta = 0;
      for (int v = 0; v < d; ++v) {
        for (int m = 2; m <= g[v]; ++m) t.weight /= m;
      }
      for (int j = 0; j < n; ++j) {
        t.right[j] = g[n + j];
        t.right[n + j] = g[j];
        beta += g[n + j];
      }
      if (beta % 2) t.weight = -t.weight;
      out.push_back(t);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      g[var] = static_cast<std::uint8_t>(c);
      self(self, var + 1, remaining - c);
    }
  };
  rec(rec, 0, k);
  return out;
}

const std::vector<BidiffTerm>& cached_terms(int n, int k) {
  static thread_local std::map<std::pair<int, int>, std::vector<BidiffTerm>> cache;
  auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, bidiff_terms(n, k)).first;
  return it->second;
}

Complex half_i_power(int k) {
  static const Complex half_i(0.0, 0.5);
  return std::pow(half_i, k);
}

// Derivatives of e^{i phi} u divided by e^{i phi}: D_v = d_v + i (d_v phi).
class TwistedDerivatives {
 public:
  TwistedDerivatives(PolySymbol u, const std::vector<PolySymbol>* i_dphi) : i_dphi_(i_dphi) {
    cache_.emplace(Exponent{}, std::move(u));
  }

  const PolySymbol& get(const Exponent& g) {
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;
    int v = 0;
    while (g[v] == 0) ++v;
    Exponent prev = g;
    prev[v] = static_cast<std::uint8_t>(g[v] - 1);
    const PolySymbol& base = get(prev);
    PolySymbol d = base.derivative(v);
    if (i_dphi_ && !(*i_dphi_)[v].is_zero()) d += (*i_dphi_)[v] * base;
    return cache_.emplace(g, std::move(d)).first->second;
  }

 private:
  const std::vector<PolySymbol>* i_dphi_;
  std::map<Exponent, PolySymbol> cache_;
};

std::vector<PolySymbol> i_gradient(const PolySymbol& phi) {
  std::vector<PolySymbol> out;
  for (int v = 0; v < phi.space().dim(); ++v) out.push_back(phi.derivative(v) * Complex(0.0, 1.0));
  return out;
}

PolySymbol bidiff(int n, int k, TwistedDerivatives& left, TwistedDerivatives& right, const PolySymbol& zero) {
  PolySymbol acc = zero;
  for (const auto& t : cached_terms(n, k)) {
    const PolySymbol& l = left.get(t.left);
    if (l.is_zero()) continue;
    const PolySymbol& r = right.get(t.right);
    if (r.is_zero()) continue;
    acc += (l * r) * Complex(t.weight);
  }
  return acc;
}

void check_star_inputs(const HExpansion& a, const HExpansion& b, int K) {
  if (!(a.space() == b.space())) throw DimensionError("star product of symbols on different phase spaces");
  if (a.trunc() < K - b.lowest_power() || b.trunc() < K - a.lowest_power())
    throw TruncationError("star product to h^" + std::to_string(K) +
                          " needs coefficients beyond the inputs' truncation");
}

HExpansion star_kernel(const HExpansion& a, const std::vector<PolySymbol>* ida, const HExpansion& b,
                       const std::vector<PolySymbol>* idb, int K) {
  check_star_inputs(a, b, K);
  const PhaseSpace ps = a.space();
  const int lo_a = a.lowest_power();
  const int lo_b = b.lowest_power();
  HExpansion out(ps, a.order() + b.order(), K);
  std::vector<TwistedDerivatives> da, db;
  for (int i = lo_a; i <= K - lo_b; ++i) da.emplace_back(a.coeff(i), ida);
  for (int i = lo_b; i <= K - lo_a; ++i) db.emplace_back(b.coeff(i), idb);
  const PolySymbol zero(ps);
  for (int j = lo_a + lo_b; j <= K; ++j) {
    PolySymbol acc(ps);
    for (int i = lo_a; i <= j - lo_b; ++i) {
      for (int i2 = lo_b; i + i2 <= j; ++i2) {
        const int k = j - i - i2;
        auto& left = da[static_cast<std::size_t>(i - lo_a)];
        auto& right = db[static_cast<std::size_t>(i2 - lo_b)];
        if (left.get(Exponent{}).is_zero() || right.get(Exponent{}).is_zero()) continue;
        acc += bidiff(ps.n, k, left, right, zero) * half_i_power(k);
      }
    }
    out.set_coeff(j, std::move(acc));
  }
  return out;
}

}  // namespace

HExpansion star(const HExpansion& a, const HExpansion& b, const StarContext& ctx) {
  if (!(a.space() == ctx.space)) throw DimensionError("star context and symbol phase spaces differ");
  return star_kernel(a, nullptr, b, nullptr, ctx.trunc);
}

HExpansion star_commutator(const HExpansion& a, const HExpansion& b, const StarContext& ctx) {
  return star(a, b, ctx) - star(b, a, ctx);
}

HExpansion star_commutator_scaled(const HExpansion& a, const HExpansion& b, const StarContext& ctx) {
  const HExpansion c = star_commutator(a, b, ctx);
  const int lo = c.lowest_power();
  const double scale = std::max(1.0, star(a, b, ctx).coeff(lo).max_abs_coefficient());
  if (c.coeff(lo).max_abs_coefficient() > 1e-12 * scale)
    throw Error("commutator has a nonzero leading coefficient");
  // Divide by h: coefficient j of the result is coefficient j+1 of c.
  HExpansion out(c.space(), c.order(), c.trunc() - 1);
  for (int j = lo; j <= c.trunc() - 1; ++j) out.set_coeff(j, c.coeff(j + 1) * Complex(0.0, 1.0));
  return out;
}

namespace {

void check_elliptic_on_region(const PolySymbol& a0, const Region& region, double eps_rel) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& p : region.sample_grid(region.dim() <= 2 ? 41 : 9)) {
    const double v = std::abs(a0.evaluate(p));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > 0.0) || lo < eps_rel * hi)
    throw NotEllipticError("principal symbol is not bounded away from zero on the region (min |a0| = " +
                           std::to_string(lo) + ")");
}

}  // namespace

HExpansion star_inverse(const HExpansion& a, const Region& region, const StarContext& ctx, double eps_rel) {
  if (a.order() != 0) throw DomainError("star_inverse expects an order-0 symbol");
  if (a.trunc() < ctx.trunc) throw TruncationError("symbol is not known through the context truncation");
  const PolySymbol& a0 = a.coeff(0);
  check_elliptic_on_region(a0, region, eps_rel);
  if (!a0.is_constant())
    throw NotPolynomialError("inverse of a non-constant principal symbol is not polynomial; use the sampled backend");
  const Complex c = a0.constant_term();
  HExpansion b(a.space(), 0, ctx.trunc);
  b.set_coeff(0, PolySymbol::constant(a.space(), 1.0 / c));
  for (int k = 1; k <= ctx.trunc; ++k) {
    const HExpansion ab = star(a, b, ctx);
    b.set_coeff(k, ab.coeff(k) * (-1.0 / c));
  }
  return b;
}

HExpansion conjugate_symbol(const HExpansion& p, const HExpansion& b, const Region& region, const StarContext& ctx) {
  const HExpansion b_inv = star_inverse(b, region, ctx);
  const HExpansion out = star(star(b_inv, p, ctx), b, ctx);
  // b_0 is constant here, so the predicted first-order change H_{i log b0} p0 vanishes.
  if (p.order() == 0 && ctx.trunc >= 1) {
    const double defect = (out.coeff(1) - p.coeff(1)).max_abs_coefficient();
    const double scale = std::max(1.0, p.max_abs());
    if (defect > 1e-9 * scale) throw Error("conjugation changed the symbol at order h beyond the principal prediction");
  }
  return out;
}

HExpansion adjoint_exp(const HExpansion& f, const HExpansion& p, Complex s, const StarContext& ctx) {
  HExpansion result = p.truncated(ctx.trunc);
  HExpansion term = result;
  for (int k = 1; k <= ctx.trunc + 2; ++k) {
    term = star_commutator(f, term, ctx) * (s / static_cast<double>(k));
    if (term.max_abs() == 0.0) break;
    result += term;
  }
  return result;
}

HExpansion star_exp_i(const HExpansion& f, const StarContext& ctx) {
  if (f.lowest_power() < 1) throw DomainError("power-series star exponential needs f = O(h)");
  HExpansion result = HExpansion::constant(f.space(), 1.0, ctx.trunc);
  HExpansion term = result;
  for (int k = 1; k <= ctx.trunc; ++k) {
    term = star(f, term, ctx) * (Complex(0.0, 1.0) / static_cast<double>(k));
    if (term.max_abs() == 0.0) break;
    result += term;
  }
  return result;
}

// ---------------------------------------------------------------------------

PhasedExpansion PhasedExpansion::plain(const HExpansion& a) { return PhasedExpansion{PolySymbol(a.space()), a}; }

Complex PhasedExpansion::evaluate(const Point& rho, double h) const {
  return std::exp(Complex(0.0, 1.0) * phase.evaluate(rho)) * amplitude.evaluate(rho, h);
}

Complex PhasedExpansion::coeff_at(int j, const Point& rho) const {
  return std::exp(Complex(0.0, 1.0) * phase.evaluate(rho)) * amplitude.coeff(j).evaluate(rho);
}

PhasedExpansion star(const PhasedExpansion& a, const PhasedExpansion& b, const StarContext& ctx) {
  if (!(a.amplitude.space() == ctx.space)) throw DimensionError("star context and symbol phase spaces differ");
  const auto ida = i_gradient(a.phase);
  const auto idb = i_gradient(b.phase);
  PhasedExpansion out;
  out.phase = (a.phase + b.phase).pruned(0.0);
  out.amplitude = star_kernel(a.amplitude, a.has_phase() ? &ida : nullptr, b.amplitude,
                              b.has_phase() ? &idb : nullptr, ctx.trunc);
  return out;
}

PhasedExpansion star_inverse(const PhasedExpansion& a, const StarContext& ctx) {
  if (a.amplitude.order() != 0) throw DomainError("star_inverse expects an order-0 amplitude");
  const PolySymbol& a0 = a.amplitude.coeff(0);
  if (!a0.is_constant() || a0.constant_term() == Complex(0.0))
    throw NotPolynomialError("phase-amplitude inverse needs a nonzero constant principal amplitude");
  const Complex c = a0.constant_term();
  PhasedExpansion b{-a.phase, HExpansion(ctx.space, 0, ctx.trunc)};
  b.amplitude.set_coeff(0, PolySymbol::constant(ctx.space, 1.0 / c));
  for (int k = 1; k <= ctx.trunc; ++k) {
    const PhasedExpansion ab = star(a, b, ctx);
    b.amplitude.set_coeff(k, ab.amplitude.coeff(k) * (-1.0 / c));
  }
  return b;
}

PhasedExpansion star_exp_i(const PolySymbol& f, const StarContext& ctx) {
  // E_t = exp_#(i t f) = e^{i t f} U(t) solves dE/dt = i f # E, E_0 = 1.
  // Writing U = sum_j h^j U_j (polynomials in rho and t), the ansatz gives
  // dU_j/dt = i sum_{k>=1} (i/2)^k T_k(f, U_{j-k}) where T_k uses plain
  // derivatives on f and twisted derivatives d + i t (d f) on U.
  const PhaseSpace ps = f.space();
  const int tvar = ps.dim();
  const PolySymbol ft = f.with_extra_vars(1);
  const PolySymbol t = PolySymbol::coordinate(ps, tvar, 1);
  std::vector<PolySymbol> i_dphi;
  for (int v = 0; v < ps.dim(); ++v) i_dphi.push_back(t * ft.derivative(v) * Complex(0.0, 1.0));

  std::vector<PolySymbol> U;
  U.push_back(PolySymbol::constant(ps, 1.0, 1));
  TwistedDerivatives df(ft, nullptr);
  std::vector<TwistedDerivatives> du;
  du.emplace_back(U[0], &i_dphi);
  const PolySymbol zero(ps, 1);
  for (int j = 1; j <= ctx.trunc; ++j) {
    PolySymbol rhs(ps, 1);
    for (int k = 1; k <= j; ++k) rhs += bidiff(ps.n, k, df, du[static_cast<std::size_t>(j - k)], zero) * half_i_power(k);
    U.push_back((rhs * Complex(0.0, 1.0)).integrate(tvar));
    du.emplace_back(U.back(), &i_dphi);
  }
  PhasedExpansion out{f, HExpansion(ps, 0, ctx.trunc)};
  for (int j = 0; j <= ctx.trunc; ++j) out.amplitude.set_coeff(j, U[static_cast<std::size_t>(j)].substitute_last(1.0));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class SampledDerivatives {
 public:
  explicit SampledDerivatives(SampledSymbol u) { cache_.emplace(Exponent{}, std::move(u)); }
  const SampledSymbol& get(const Exponent& g) {
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;
    int v = 0;
    while (g[v] == 0) ++v;
    Exponent prev = g;
    prev[v] = static_cast<std::uint8_t>(g[v] - 1);
    SampledSymbol d = get(prev).derivative(v);
    return cache_.emplace(g, std::move(d)).first->second;
  }

 private:
  std::map<Exponent, SampledSymbol> cache_;
};

}  // namespace

SampledExpansion star(const SampledExpansion& a, const SampledExpansion& b, const StarContext& ctx) {
  if (!(a.grid() == b.grid())) throw DimensionError("sampled symbols on different grids");
  if (a.trunc < ctx.trunc || b.trunc < ctx.trunc) throw TruncationError("sampled star beyond input truncation");
  const int n = ctx.space.n;
  std::vector<SampledDerivatives> da, db;
  for (int i = 0; i <= ctx.trunc; ++i) {
    da.emplace_back(a.coeff(i));
    db.emplace_back(b.coeff(i));
  }
  SampledExpansion out{ctx.space, ctx.trunc, {}};
  for (int j = 0; j <= ctx.trunc; ++j) {
    SampledSymbol acc = SampledSymbol::zeros(a.grid());
    for (int i = 0; i <= j; ++i) {
      for (int i2 = 0; i + i2 <= j; ++i2) {
        const int k = j - i - i2;
        for (const auto& t : cached_terms(n, k)) {
          acc += (da[i].get(t.left) * db[i2].get(t.right)) * (half_i_power(k) * t.weight);
        }
      }
    }
    out.coeffs.push_back(std::move(acc));
  }
  return out;
}

SampledExpansion star_inverse(const SampledExpansion& a, const StarContext& ctx, double eps_rel) {
  const SampledSymbol& a0 = a.coeff(0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& v : a0.values) {
    lo = std::min(lo, std::abs(v));
    hi = std::max(hi, std::abs(v));
  }
  if (!(hi > 0.0) || lo < eps_rel * hi) throw NotEllipticError("sampled principal symbol vanishes on the grid");
  SampledSymbol b0 = a0;
  for (auto& v : b0.values) v = 1.0 / v;
  SampledExpansion b{ctx.space, ctx.trunc, {b0}};
  for (int k = 1; k <= ctx.trunc; ++k) b.coeffs.push_back(SampledSymbol::zeros(a0.grid));
  for (int k = 1; k <= ctx.trunc; ++k) {
    const SampledExpansion ab = star(a, b, ctx);
    b.coeffs[static_cast<std::size_t>(k)] = (b0 * ab.coeff(k)) * Complex(-1.0);
  }
  return b;
}

SampledExpansion conjugate_symbol(const SampledExpansion& p, const SampledExpansion& b, const StarContext& ctx,
                                  int margin) {
  const SampledExpansion b_inv = star_inverse(b, ctx);
  const SampledExpansion out = star(star(b_inv, p, ctx), b, ctx);
  if (ctx.trunc >= 1) {
    // Predicted first-order change: H_{i log b0} p0 = i {b0, p0} / b0.
    const PhaseSpace& ps = ctx.space;
    SampledSymbol pred = SampledSymbol::zeros(p.grid());
    const SampledSymbol& b0 = b.coeff(0);
    const SampledSymbol& p0 = p.coeff(0);
    for (int j = 0; j < ps.n; ++j) {
      pred += b0.derivative(ps.xi_index(j)) * p0.derivative(ps.x_index(j));
      pred -= b0.derivative(ps.x_index(j)) * p0.derivative(ps.xi_index(j));
    }
    for (std::size_t i = 0; i < pred.values.size(); ++i) pred.values[i] *= Complex(0.0, 1.0) / b0.values[i];
    const SampledSymbol diff = (out.coeff(1) - p.coeff(1)) - pred;
    const auto nodes = p.grid().interior(margin);
    const double scale = std::max(1.0, p.coeff(0).max_abs(nodes));
    if (diff.max_abs(nodes) > 1e-6 * scale)
      throw Error("sampled conjugation violates the principal-level prediction");
  }
  return out;
}

}  // namespace psido
