#include "psido/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "psido/fio.hpp"
#include "psido/symbol_json.hpp"

namespace psido {

using nlohmann::json;

namespace {

constexpr Complex kI(0.0, 1.0);

HExpansion lift(const PolySymbol& p, int trunc) { return HExpansion::principal(p, trunc); }

// f placed at h^{level-1}, known through h^trunc.
HExpansion at_level(const PolySymbol& f, int level, int trunc) {
  return lift(f, trunc - level + 1).times_h_power(level - 1);
}

double diff(const HExpansion& a, const HExpansion& b) { return (a - b).max_abs(); }

std::vector<PolySymbol> coordinates(PhaseSpace ps) {
  std::vector<PolySymbol> z;
  for (int k = 0; k < ps.dim(); ++k) z.push_back(PolySymbol::coordinate(ps, k));
  return z;
}

void require_affine(const SymplecticMap& k) {
  if (k.kind() != MapKind::Linear) throw NotPolynomialError("symbol-level oracles need an affine map");
}

Region image_region(const Region& r, const SymplecticMap& k) {
  if (r.kind() == RegionKind::Box) {
    Point lo = k(r.lower()), hi = lo;
    const int d = r.dim();
    for (int mask = 0; mask < (1 << d); ++mask) {
      Point c(d);
      for (int a = 0; a < d; ++a) c[a] = (mask >> a) & 1 ? r.upper()[a] : r.lower()[a];
      const Point q = k(c);
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    return Region::box(lo, hi);
  }
  Eigen::JacobiSVD<Matrix> svd(k.matrix());
  return Region::ball(k(r.center()), r.radius() * svd.singularValues()(0));
}

}  // namespace

IsomorphismOracle identity_oracle(PhaseSpace space, Region region, int trunc) {
  auto id = [trunc](const HExpansion& p) { return p.truncated(std::min(trunc, p.trunc())); };
  return IsomorphismOracle{id, id, region, region, space, trunc, "identity"};
}

IsomorphismOracle pullback_oracle(const SymplecticMap& M, const Region& domain, int trunc) {
  require_affine(M);
  const Eigen::FullPivLU<Matrix> lu(M.matrix());
  if (!lu.isInvertible()) throw DomainError("pullback oracle needs an invertible map");
  const SymplecticMap inv = SymplecticMap::linear(lu.inverse(), -lu.solve(M.offset()));
  auto fwd = [inv](const HExpansion& p) { return p.map_coeffs([&](const PolySymbol& a) { return pullback(a, inv); }); };
  auto bwd = [M](const HExpansion& p) { return p.map_coeffs([&](const PolySymbol& a) { return pullback(a, M); }); };
  const PhaseSpace ps(M.dim() / 2);
  return IsomorphismOracle{fwd, bwd, domain, image_region(domain, M), ps, trunc, "pullback"};
}

IsomorphismOracle synthesize_oracle(const SymplecticMap& kappa, const std::vector<PolySymbol>& potentials,
                                    const Region& domain, const StarContext& ctx) {
  require_affine(kappa);
  const double defect = symplectic_defect(kappa.matrix());
  if (defect > 1e-10) throw NotSymplecticError("synthesis needs a symplectic map; defect " + std::to_string(defect));
  if (static_cast<int>(potentials.size()) > ctx.trunc)
    throw TruncationError("truncation too short for the number of corrector levels");
  IsomorphismOracle base = pullback_oracle(kappa, domain, ctx.trunc);
  std::vector<HExpansion> layers;
  for (std::size_t l = 0; l < potentials.size(); ++l)
    layers.push_back(at_level(potentials[l], static_cast<int>(l) + 1, ctx.trunc));
  // Queries known through fewer orders are answered through those orders.
  auto fwd = [base, layers, ctx](const HExpansion& p) {
    const StarContext c(ctx.space, std::min(ctx.trunc, p.trunc()));
    HExpansion q = base.apply(p.truncated(c.trunc));
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
      if (it->lowest_power() <= c.trunc) q = adjoint_exp(it->truncated(c.trunc), q, kI, c);
    return q;
  };
  auto bwd = [base, layers, ctx](const HExpansion& p) {
    const StarContext c(ctx.space, std::min(ctx.trunc, p.trunc()));
    HExpansion q = p.truncated(c.trunc);
    for (const auto& f : layers)
      if (f.lowest_power() <= c.trunc) q = adjoint_exp(f.truncated(c.trunc), q, -kI, c);
    return base.apply_inverse(q);
  };
  base.apply = fwd;
  base.apply_inverse = bwd;
  base.label = "synthesized";
  return base;
}

IsomorphismOracle tampered_oracle(IsomorphismOracle g, int level, double eps) {
  if (level < 1) throw DomainError("tampering level must be >= 1");
  // T(p) = (1 + eps h^l) p, T^{-1}(p) = sum_k (-eps h^l)^k p.
  auto scale = [level](const HExpansion& p, double e) {
    HExpansion out = p;
    HExpansion term = p;
    for (int k = 1; k * level <= p.trunc() - p.lowest_power(); ++k) {
      term = term.times_h_power(level).truncated(p.trunc()) * Complex(e);
      out += term;
    }
    return out;
  };
  auto fwd = g.apply;
  auto bwd = g.apply_inverse;
  g.apply = [fwd, level, eps](const HExpansion& p) {
    return fwd(p + (p.times_h_power(level).truncated(p.trunc()) * Complex(eps)));
  };
  g.apply_inverse = [bwd, scale, eps](const HExpansion& p) { return scale(bwd(p), -eps); };
  g.label = "tampered";
  return g;
}

// ---------------------------------------------------------------------------

json region_to_json(const Region& r) {
  auto vec = [](const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); };
  switch (r.kind()) {
    case RegionKind::Ball:
      return {{"kind", "ball"}, {"center", vec(r.center())}, {"radius", r.radius()}};
    case RegionKind::Box:
      return {{"kind", "box"}, {"lo", vec(r.lower())}, {"hi", vec(r.upper())}};
    case RegionKind::FullTorus:
      return {{"kind", "torus"}};
  }
  return {};
}

Region region_from_json(const json& j) {
  auto pt = [](const json& a) {
    const auto v = a.get<std::vector<double>>();
    return Point(Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ball") return Region::ball(pt(j.at("center")), j.at("radius").get<double>());
  if (kind == "box") return Region::box(pt(j.at("lo")), pt(j.at("hi")));
  if (kind == "torus") return Region::full_torus();
  throw ConfigError("unknown region kind '" + kind + "'");
}

json oracle_transcript(const IsomorphismOracle& g) {
  json fwd = json::array(), bwd = json::array();
  for (const auto& z : coordinates(g.space)) {
    fwd.push_back(to_json(g.apply(lift(z, g.trunc))));
    bwd.push_back(to_json(g.apply_inverse(lift(z, g.trunc))));
  }
  return {{"n", g.space.n},
          {"trunc", g.trunc},
          {"label", g.label},
          {"domain", region_to_json(g.domain)},
          {"codomain", region_to_json(g.codomain)},
          {"generators", fwd},
          {"inverse_generators", bwd}};
}

namespace {

// Extends generator images to all polynomials with the Weyl symmetrization
// z_k p = (z_k # p + p # z_k) / 2, which holds exactly for linear z_k.
class WordExtension {
 public:
  WordExtension(std::vector<HExpansion> images, StarContext ctx) : images_(std::move(images)), ctx_(ctx) {}

  HExpansion operator()(const HExpansion& p) {
    HExpansion out = HExpansion::constant(ctx_.space, 0.0, ctx_.trunc);
    for (int j = std::max(0, p.lowest_power()); j <= std::min(p.trunc(), ctx_.trunc); ++j) {
      if (p.coeff(j).is_zero()) continue;
      out += polynomial(p.coeff(j)).times_h_power(j).truncated(ctx_.trunc);
    }
    if (p.lowest_power() < 0) throw DomainError("transcript oracles act on order-0 symbols");
    return out.truncated(std::min(ctx_.trunc, p.trunc()));
  }

 private:
  HExpansion polynomial(const PolySymbol& a) {
    HExpansion out = HExpansion::constant(ctx_.space, 0.0, ctx_.trunc);
    for (const auto& [e, c] : a.terms()) out += monomial(e) * c;
    return out;
  }

  const HExpansion& monomial(const Exponent& e) {
    auto it = cache_.find(e);
    if (it != cache_.end()) return it->second;
    const int d = ctx_.space.dim();
    int k = 0;
    while (k < d && e[k] == 0) ++k;
    HExpansion value;
    if (k == d) {
      value = HExpansion::constant(ctx_.space, 1.0, ctx_.trunc);
    } else {
      Exponent rest = e;
      rest[k] = static_cast<std::uint8_t>(e[k] - 1);
      const HExpansion r = monomial(rest);
      const HExpansion& zk = images_[static_cast<std::size_t>(k)];
      value = (star(zk, r, ctx_) + star(r, zk, ctx_)) * Complex(0.5);
    }
    return cache_.emplace(e, std::move(value)).first->second;
  }

  std::vector<HExpansion> images_;
  StarContext ctx_;
  std::map<Exponent, HExpansion> cache_;
};

}  // namespace

IsomorphismOracle oracle_from_transcript(const json& j) {
  try {
    const PhaseSpace ps(j.at("n").get<int>());
    const int trunc = j.at("trunc").get<int>();
    const StarContext ctx(ps, trunc);
    std::vector<HExpansion> fwd, bwd;
    for (const auto& e : j.at("generators")) fwd.push_back(expansion_from_json(e));
    for (const auto& e : j.at("inverse_generators")) bwd.push_back(expansion_from_json(e));
    if (static_cast<int>(fwd.size()) != ps.dim() || static_cast<int>(bwd.size()) != ps.dim())
      throw ConfigError("transcript needs one image per coordinate");
    auto wf = std::make_shared<WordExtension>(fwd, ctx);
    auto wb = std::make_shared<WordExtension>(bwd, ctx);
    return IsomorphismOracle{[wf](const HExpansion& p) { return (*wf)(p); },
                             [wb](const HExpansion& p) { return (*wb)(p); },
                             region_from_json(j.at("domain")),
                             region_from_json(j.at("codomain")),
                             ps,
                             trunc,
                             j.value("label", std::string("transcript"))};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed oracle transcript: ") + e.what());
  }
}

std::vector<PolySymbol> probe_symbols(PhaseSpace space, int random_count, std::uint64_t seed) {
  std::vector<PolySymbol> probes = coordinates(space);
  probes.push_back(PolySymbol::x(space, 0) * PolySymbol::xi(space, 0));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> var(0, space.dim() - 1), deg(0, 3);
  for (int r = 0; r < random_count; ++r) {
    PolySymbol p(space);
    for (int t = 0; t < 4; ++t) {
      std::vector<int> exps(static_cast<std::size_t>(space.dim()), 0);
      const int d = deg(rng);
      for (int k = 0; k < d; ++k) ++exps[static_cast<std::size_t>(var(rng))];
      p += PolySymbol::monomial(space, exps, coef(rng));
    }
    probes.push_back(p);
  }
  return probes;
}

OracleAudit audit_oracle(const IsomorphismOracle& g, const std::vector<PolySymbol>& probes, const StarContext& ctx,
                         double tol, bool full) {
  OracleAudit a;
  const int K = g.trunc;
  for (const auto& p : probes) {
    const HExpansion P = lift(p, K);
    const HExpansion gp = g.apply(P);
    if (gp.lowest_power() < 0) a.order_defect = std::max(a.order_defect, gp.max_abs(gp.lowest_power(), -1));
    a.inverse_defect = std::max(a.inverse_defect, diff(g.apply_inverse(gp), P));
    if (full) {
      const Complex C(1.5, -0.5);
      const HExpansion one = HExpansion::constant(g.space, C, K);
      a.unit_defect = std::max(a.unit_defect, diff(g.apply(P + one), gp + one));
      for (const auto& q : probes) {
        const HExpansion Q = lift(q, K);
        a.multiplicative_defect =
            std::max(a.multiplicative_defect, diff(g.apply(star(P, Q, ctx)), star(gp, g.apply(Q), ctx)));
      }
    }
  }
  auto fail = [tol](double v, const char* what) {
    if (v > tol) throw InconsistentOracleError(std::string(what) + " defect " + std::to_string(v));
  };
  fail(a.order_defect, "order preservation");
  fail(a.inverse_defect, "inverse");
  fail(a.unit_defect, "unitalization");
  fail(a.multiplicative_defect, "multiplicativity");
  return a;
}

namespace {

PolySymbol level_part(const IsomorphismOracle& g, const PolySymbol& p, int level, double tol) {
  const HExpansion r = g.apply(lift(p, g.trunc)) - lift(p, g.trunc);
  if (level > r.trunc()) throw TruncationError("oracle truncation below the requested level");
  const double below = r.max_abs(r.lowest_power(), level - 1);
  if (below > tol)
    throw InconsistentOracleError("discrepancy below level " + std::to_string(level) + ": " + std::to_string(below));
  return r.coeff(level);
}

}  // namespace

double audit_derivation(const IsomorphismOracle& g, int level, const std::vector<PolySymbol>& probes, double tol) {
  std::vector<PolySymbol> beta;
  for (const auto& p : probes) beta.push_back(level_part(g, p, level, tol));
  double worst = 0.0;
  for (std::size_t a = 0; a < probes.size(); ++a)
    for (std::size_t b = a; b < probes.size(); ++b) {
      const auto& p = probes[a];
      const auto& q = probes[b];
      const PolySymbol leib = level_part(g, p * q, level, tol) - (beta[a] * q + p * beta[b]);
      const PolySymbol pois = level_part(g, poisson_bracket(p, q), level, tol) -
                              (poisson_bracket(beta[a], q) + poisson_bracket(p, beta[b]));
      const double scale = 1.0 + beta[a].max_abs_coefficient() + beta[b].max_abs_coefficient();
      worst = std::max({worst, leib.max_abs_coefficient() / scale, pois.max_abs_coefficient() / scale});
    }
  if (worst > tol)
    throw NotADerivationError("level-" + std::to_string(level) + " part violates the Leibniz rules (defect " +
                              std::to_string(worst) + ")");
  return worst;
}

}  // namespace psido

namespace psido {

UniformGrid domain_grid(const Region& r, int per_axis) {
  if (r.kind() == RegionKind::Ball) {
    const double half = r.radius() / std::sqrt(static_cast<double>(r.dim()));
    return UniformGrid::around(r.center(), half, per_axis);
  }
  return UniformGrid(r.lower(), r.upper(), per_axis);
}

KappaRecovery recover_kappa(const IsomorphismOracle& g, const UniformGrid& grid, double tol) {
  const PhaseSpace ps = g.space;
  const int d = ps.dim();
  if (grid.dim() != d) throw DimensionError("probe grid and oracle dimensions differ");
  KappaRecovery out{grid, {}, {}, {}, 0.0};
  for (const auto& z : coordinates(ps)) {
    out.forward.push_back(g.apply(HExpansion::principal(z, 0)).coeff(0));
    out.backward.push_back(g.apply_inverse(HExpansion::principal(z, 0)).coeff(0));
  }
  std::vector<std::vector<PolySymbol>> jac(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) jac[a].push_back(out.forward[a].derivative(b));

  Point sigma = g.codomain.center();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point rho = grid.point(i);
    if (!g.domain.contains(rho, 1e-12)) throw RegionError("probe node outside the oracle domain");
    Point direct(d);
    for (int a = 0; a < d; ++a) direct[a] = out.backward[a].evaluate(rho).real();
    out.images.push_back(direct);
    // Newton on c(sigma) = rho, continued from the previous node.
    bool converged = false;
    for (int it = 0; it < 60 && !converged; ++it) {
      Point r(d);
      Matrix J(d, d);
      for (int a = 0; a < d; ++a) {
        r[a] = out.forward[a].evaluate(sigma).real() - rho[a];
        for (int b = 0; b < d; ++b) J(a, b) = jac[a][b].evaluate(sigma).real();
      }
      const Point step = J.fullPivLu().solve(r);
      sigma -= step;
      converged = step.norm() <= 1e-14 * (1.0 + sigma.norm());
    }
    if (!converged) throw InconsistentOracleError("Newton inversion of the approximate coordinates did not converge");
    out.route_disagreement = std::max(out.route_disagreement, (sigma - direct).cwiseAbs().maxCoeff());
  }
  if (out.route_disagreement > tol)
    throw InconsistentOracleError("kappa recovery routes disagree by " + std::to_string(out.route_disagreement));
  return out;
}

double verify_symplectic_recovery(const UniformGrid& grid, const std::vector<Point>& images) {
  if (grid.per_axis() < 9) throw ResolutionError("symplectic check needs at least 9 nodes per axis");
  if (images.size() != grid.size()) throw DimensionError("one image per grid node expected");
  const int d = grid.dim();
  std::vector<std::vector<SampledSymbol>> dk(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const SampledSymbol comp = SampledSymbol::sample(grid, [&](const Point& p) {
      return Complex(images[grid.node_at(p)][a]);
    });
    for (int b = 0; b < d; ++b) dk[a].push_back(comp.derivative(b));
  }
  const Matrix Om = canonical_form(d / 2);
  double worst = 0.0;
  for (auto i : grid.interior(2)) {
    Matrix J(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) J(a, b) = dk[a][b].values[i].real();
    worst = std::max(worst, (J * Om * J.transpose() - Om).cwiseAbs().maxCoeff());
  }
  return worst;
}

SymplecticMap fit_affine(const UniformGrid& grid, const std::vector<Point>& images, double tol) {
  const int d = grid.dim();
  const auto n = static_cast<Eigen::Index>(grid.size());
  Matrix A(n, d + 1), Y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    A.row(i).head(d) = grid.point(static_cast<std::size_t>(i)).transpose();
    A(i, d) = 1.0;
    Y.row(i) = images[static_cast<std::size_t>(i)].transpose();
  }
  const Matrix X = A.colPivHouseholderQr().solve(Y);
  const double resid = (A * X - Y).cwiseAbs().maxCoeff();
  if (resid > tol * (1.0 + Y.cwiseAbs().maxCoeff()))
    throw NotPolynomialError("recovered map is not affine (fit residual " + std::to_string(resid) + ")");
  return SymplecticMap::linear(X.topRows(d).transpose(), X.row(d).transpose());
}

IsomorphismOracle reduce_by_fio(const IsomorphismOracle& g, const SymplecticMap& kappa,
                                const std::vector<PolySymbol>& probes, double tol) {
  require_affine(kappa);
  const SymplecticMap inv = kappa.inverse();
  auto fwd = g.apply;
  auto bwd = g.apply_inverse;
  IsomorphismOracle g1{
      [fwd, kappa](const HExpansion& p) {
        return fwd(p).map_coeffs([&](const PolySymbol& a) { return pullback(a, kappa); });
      },
      [bwd, inv](const HExpansion& p) {
        return bwd(p.map_coeffs([&](const PolySymbol& a) { return pullback(a, inv); }));
      },
      g.domain, g.domain, g.space, g.trunc, g.label + "/reduced"};
  double worst = 0.0;
  for (const auto& p : probes) {
    const PolySymbol d0 = g1.apply(HExpansion::principal(p, 0)).coeff(0) - p;
    worst = std::max(worst, d0.max_abs_coefficient() / (1.0 + p.max_abs_coefficient()));
  }
  if (worst > tol)
    throw KappaMismatchError("reduction changes principal symbols by " + std::to_string(worst));
  return g1;
}

DerivationSample extract_derivation(const IsomorphismOracle& g, int level, const UniformGrid& grid, double tol) {
  if (level < 1) throw DomainError("derivation level must be >= 1");
  const PhaseSpace ps = g.space;
  const int n = ps.n;
  DerivationSample ds;
  ds.level = level;
  for (int j = 0; j < n; ++j) {
    ds.gamma_poly.push_back(level_part(g, PolySymbol::x(ps, j), level, tol));
    ds.delta_poly.push_back(level_part(g, PolySymbol::xi(ps, j), level, tol));
    ds.gamma.push_back(SampledSymbol::from_poly(grid, ds.gamma_poly.back()));
    ds.delta.push_back(SampledSymbol::from_poly(grid, ds.delta_poly.back()));
  }
  // Closedness of gamma . dxi - delta . dx:
  //   d_xi_k gamma_j = d_xi_j gamma_k,  d_x_k delta_j = d_x_j delta_k,  d_x_k gamma_j = -d_xi_j delta_k.
  const auto nodes = grid.interior(2);
  double scale = 1.0;
  for (int j = 0; j < n; ++j) scale = std::max({scale, ds.gamma[j].max_abs(nodes), ds.delta[j].max_abs(nodes)});
  double worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const int xk = ps.x_index(k), xik = ps.xi_index(k), xj = ps.x_index(j), xij = ps.xi_index(j);
      worst = std::max(worst, (ds.gamma[j].derivative(xik) - ds.gamma[k].derivative(xij)).max_abs(nodes));
      worst = std::max(worst, (ds.delta[j].derivative(xk) - ds.delta[k].derivative(xj)).max_abs(nodes));
      worst = std::max(worst, (ds.gamma[j].derivative(xk) + ds.delta[k].derivative(xij)).max_abs(nodes));
    }
  ds.closedness_defect = worst;
  if (worst > tol * scale)
    throw NotADerivationError("one-form at level " + std::to_string(level) + " is not closed (defect " +
                              std::to_string(worst) + ")");
  return ds;
}

Complex line_integral(const std::function<Point(const Point&)>& gamma, const std::function<Point(const Point&)>& delta,
                      const Point& rho0, const Point& rho, double rel_tol) {
  const int n = static_cast<int>(rho.size()) / 2;
  const Point v = rho - rho0;
  auto integrand = [&](double t) {
    const Point p = rho0 + t * v;
    return gamma(p).dot(v.tail(n)) - delta(p).dot(v.head(n));
  };
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 15>::integrate(integrand, 0.0, 1.0, 15, rel_tol);
}

Potential integrate_one_form(const DerivationSample& d, const Point& rho0, const Region& region,
                             const UniformGrid& grid, double tol) {
  if (d.closedness_defect > tol * 1e3) throw NotADerivationError("refusing to integrate a non-closed one-form");
  if (!region.contains(rho0, 1e-12)) throw RegionError("base point outside the region");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!region.contains(grid.point(i), 1e-12)) throw RegionError("integration segment leaves the region");
  const int n = static_cast<int>(d.gamma_poly.size());
  const PhaseSpace ps(n);
  const int t = ps.dim();
  // rho_t = rho0 + t (rho - rho0) with t as an auxiliary variable.
  std::vector<PolySymbol> path;
  for (int k = 0; k < ps.dim(); ++k) {
    const PolySymbol zk = PolySymbol::coordinate(ps, k, 1) - PolySymbol::constant(ps, rho0[k], 1);
    path.push_back(PolySymbol::constant(ps, rho0[k], 1) + zk * PolySymbol::coordinate(ps, t, 1));
  }
  PolySymbol integrand(ps, 1);
  for (int j = 0; j < n; ++j) {
    const PolySymbol dxi = PolySymbol::coordinate(ps, ps.xi_index(j), 1) - PolySymbol::constant(ps, rho0[ps.xi_index(j)], 1);
    const PolySymbol dx = PolySymbol::coordinate(ps, ps.x_index(j), 1) - PolySymbol::constant(ps, rho0[ps.x_index(j)], 1);
    integrand += compose(d.gamma_poly[j], path) * dxi;
    integrand -= compose(d.delta_poly[j], path) * dx;
  }
  Potential out;
  out.f = integrand.integrate(t).substitute_last(1.0);
  out.f -= PolySymbol::constant(ps, out.f.evaluate(rho0));
  for (int j = 0; j < n; ++j) {
    out.rederivative_defect = std::max(
        {out.rederivative_defect, (out.f.derivative(ps.xi_index(j)) - d.gamma_poly[j]).max_abs_coefficient(),
         (out.f.derivative(ps.x_index(j)) + d.delta_poly[j]).max_abs_coefficient()});
  }
  auto gam = [&](const Point& p) {
    Point v(n);
    for (int j = 0; j < n; ++j) v[j] = d.gamma_poly[j].evaluate(p).real();
    return v;
  };
  auto del = [&](const Point& p) {
    Point v(n);
    for (int j = 0; j < n; ++j) v[j] = d.delta_poly[j].evaluate(p).real();
    return v;
  };
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / 7);
  for (std::size_t i = 0; i < grid.size(); i += stride) {
    const Point p = grid.point(i);
    const double quad = line_integral(gam, del, rho0, p).real();
    out.quadrature_defect = std::max(out.quadrature_defect, std::abs(quad - out.f.evaluate(p).real()));
  }
  return out;
}

PhasedExpansion build_corrector(const PolySymbol& f, int level, const StarContext& ctx) {
  if (level < 1) throw DomainError("corrector level must be >= 1");
  if (ctx.trunc < level) throw TruncationError("truncation too short for a level-" + std::to_string(level) + " corrector");
  if (level == 1) return star_exp_i(-f, ctx);
  return PhasedExpansion::plain(star_exp_i(at_level(-f, level, ctx.trunc), ctx));
}

IsomorphismOracle conjugate_oracle(const IsomorphismOracle& g, const PolySymbol& f, int level, const StarContext& ctx) {
  if (ctx.trunc < level) throw TruncationError("truncation too short for a level-" + std::to_string(level) + " corrector");
  const HExpansion F = at_level(f, level, ctx.trunc);
  auto fwd = g.apply;
  auto bwd = g.apply_inverse;
  IsomorphismOracle out = g;
  out.apply = [fwd, F, ctx](const HExpansion& p) {
    const HExpansion q = fwd(p);
    const StarContext c(ctx.space, std::min(ctx.trunc, q.trunc()));
    return F.lowest_power() > c.trunc ? q : adjoint_exp(F.truncated(c.trunc), q, -kI, c);
  };
  out.apply_inverse = [bwd, F, ctx](const HExpansion& p) {
    const StarContext c(ctx.space, std::min(ctx.trunc, p.trunc()));
    return bwd(F.lowest_power() > c.trunc ? p : adjoint_exp(F.truncated(c.trunc), p, kI, c));
  };
  out.label = g.label + "/corrected";
  return out;
}

}  // namespace psido

namespace psido {

namespace {

template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

struct Residual {
  double value = 0.0;
  int leading = 0;
};

Residual probe_residual(const IsomorphismOracle& g, const std::vector<PolySymbol>& probes, double tol) {
  Residual r{0.0, g.trunc + 1};
  for (const auto& p : probes) {
    const HExpansion d = g.apply(lift(p, g.trunc)) - lift(p, g.trunc);
    r.value = std::max(r.value, d.max_abs());
    r.leading = std::min(r.leading, d.leading_power(tol));
  }
  return r;
}

}  // namespace

DecompositionResult decompose_full(const IsomorphismOracle& g, const DecomposeOptions& opt) {
  const int L = opt.depth;
  if (L < 0) throw StageError("setup", "depth must be nonnegative");
  if (g.trunc < L + 1) throw StageError("setup", "oracle truncation must be at least depth + 1");
  const StarContext ctx(g.space, g.trunc);
  const auto probes = probe_symbols(g.space, opt.random_probes, opt.probe_seed);
  staged("audit", [&] { return audit_oracle(g, probes, ctx, opt.residual_tol); });

  DecompositionResult res;
  const UniformGrid grid = staged("grid", [&] { return domain_grid(g.domain, opt.grid_per_axis); });
  const KappaRecovery kr = staged("recover_kappa", [&] { return recover_kappa(g, grid, opt.kappa_tol); });
  for (std::size_t i = 0; i < grid.size(); ++i) res.kappa_nodes.push_back(grid.point(i));
  res.kappa_images = kr.images;
  res.kappa_route_disagreement = kr.route_disagreement;
  res.poisson_defect = staged("verify_symplectic", [&] {
    const double d = verify_symplectic_recovery(grid, kr.images);
    if (d > opt.poisson_tol) throw NotSymplecticError("recovered map fails the canonical relations by " + std::to_string(d));
    return d;
  });
  res.kappa_hat = staged("fit_kappa", [&] { return fit_affine(grid, kr.images); });
  IsomorphismOracle cur = staged("reduce_by_fio", [&] { return reduce_by_fio(g, res.kappa_hat, probes); });
  Residual r = probe_residual(cur, probes, opt.residual_tol);
  res.residual_log.push_back({"reduced", r.value, r.leading});

  for (int l = 1; l <= L; ++l) {
    const std::string tag = "[" + std::to_string(l) + "]";
    LevelReport rep;
    rep.level = l;
    rep.residual_before = r.value;
    rep.leading_before = r.leading;
    if (r.leading < l) throw StageError("level" + tag, "discrepancy below order h^" + std::to_string(l));
    rep.derivation_defect =
        staged("derivation" + tag, [&] { return audit_derivation(cur, l, probes, opt.derivation_tol); });
    const DerivationSample ds =
        staged("extract" + tag, [&] { return extract_derivation(cur, l, grid, opt.derivation_tol); });
    rep.closedness_defect = ds.closedness_defect;
    const Potential pot =
        staged("integrate" + tag, [&] { return integrate_one_form(ds, g.domain.center(), g.domain, grid); });
    rep.f = pot.f.pruned(1e-14);
    rep.quadrature_defect = pot.quadrature_defect;
    cur = staged("correct" + tag, [&] { return conjugate_oracle(cur, rep.f, l, ctx); });
    r = probe_residual(cur, probes, opt.residual_tol);
    rep.residual_after = r.value;
    rep.leading_after = r.leading;
    if (r.leading < l + 1) throw StageError("correct" + tag, "probe residual did not drop by one order");
    res.residual_log.push_back({"level" + tag, r.value, r.leading});
    res.levels.push_back(rep);
  }

  staged("certificate", [&] {
    const SymplecticMap inv = res.kappa_hat.inverse();
    PhasedExpansion B = PhasedExpansion::plain(HExpansion::constant(g.space, 1.0, ctx.trunc));
    for (const auto& rep : res.levels) {
      res.potentials.push_back(pullback(rep.f, inv).pruned(1e-14));
      B = star(B, build_corrector(-res.potentials.back(), rep.level, ctx), ctx);
    }
    const PhasedExpansion Binv = star_inverse(B, ctx);
    double cert = 0.0;
    for (const auto& p : probes) {
      const PhasedExpansion pt = PhasedExpansion::plain(lift(pullback(p, inv), ctx.trunc));
      const PhasedExpansion rhs = star(star(B, pt, ctx), Binv, ctx);
      if (rhs.has_phase()) throw InconsistentOracleError("phases of B and B^{-1} do not cancel");
      const HExpansion d = g.apply(lift(p, ctx.trunc)) - rhs.amplitude;
      cert = std::max(cert, d.max_abs(0, L));
    }
    res.B_symbol = B;
    res.final_certificate = cert;
    return 0;
  });
  return res;
}

json to_json(const DecompositionResult& r) {
  auto vec = [](const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); };
  json samples = json::array();
  for (std::size_t i = 0; i < r.kappa_nodes.size(); ++i)
    samples.push_back({{"in", vec(r.kappa_nodes[i])}, {"out", vec(r.kappa_images[i])}});
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"l", l.level},
                      {"closedness_defect", l.closedness_defect},
                      {"derivation_defect", l.derivation_defect},
                      {"quadrature_defect", l.quadrature_defect},
                      {"f_normalized", to_json(l.f)},
                      {"residual_before", l.residual_before},
                      {"residual_after", l.residual_after},
                      {"leading_before", l.leading_before},
                      {"leading_after", l.leading_after}});
  json log = json::array();
  for (const auto& e : r.residual_log)
    log.push_back({{"stage", e.stage}, {"residual", e.residual}, {"leading_power", e.leading_power}});
  std::vector<std::vector<double>> M;
  for (Eigen::Index i = 0; i < r.kappa_hat.matrix().rows(); ++i)
    M.push_back(vec(r.kappa_hat.matrix().row(i).transpose()));
  return {{"kappa_samples", samples},
          {"kappa_route_disagreement", r.kappa_route_disagreement},
          {"kappa_hat", {{"matrix", M}, {"offset", vec(r.kappa_hat.offset())}}},
          {"F", r.F},
          {"poisson_defect", r.poisson_defect},
          {"per_level", levels},
          {"residual_log", log},
          {"B_symbol", {{"phase", to_json(r.B_symbol.phase)}, {"amplitude", to_json(r.B_symbol.amplitude)}}},
          {"final_certificate", r.final_certificate}};
}

// ---------------------------------------------------------------------------

namespace {

CMatrix exp_quantized(const TrigSymbol& f, double scale, const TorusGrid& grid) {
  return quantize_function([&](double x, double xi) { return std::exp(kI * scale * f.evaluate(x, xi).real()); },
                           grid)
      .matrix;
}

CMatrix op_exp(int m, int n, const TorusGrid& grid) {
  return weyl_quantize(TrigSymbol::exponential(m, n), grid).matrix;
}

}  // namespace

TorusOracle synthesize_torus_oracle(const TorusGrid& grid, const Eigen::Matrix2i& L,
                                    const std::vector<TrigSymbol>& potentials) {
  const CMatrix F = metaplectic_cat(L, grid).matrix;
  CMatrix B = CMatrix::Identity(grid.N, grid.N);
  double scale = 1.0;
  for (const auto& f : potentials) {
    B = B * exp_quantized(f, scale, grid);
    scale *= grid.h();
  }
  const CMatrix Binv = B.inverse();
  return TorusOracle{grid, [F, B, Binv](const CMatrix& P) -> CMatrix {
                       return B * (F * P * F.adjoint()) * Binv;
                     }};
}

Eigen::Matrix2i recover_cat_matrix(const TorusOracle& g) {
  Eigen::Matrix2i M;
  const int probes[2][2] = {{1, 0}, {0, 1}};
  for (int c = 0; c < 2; ++c) {
    const TrigSymbol s = weyl_symbol(WeylOperator{g.grid, g.apply(op_exp(probes[c][0], probes[c][1], g.grid))});
    double best = -1.0;
    for (const auto& [k, v] : s.terms())
      if (std::abs(v) > best) {
        best = std::abs(v);
        M(0, c) = k.first;
        M(1, c) = k.second;
      }
    if (best < 0.5) throw InconsistentOracleError("image of a probe has no dominant frequency");
  }
  // M = L^{-1}; invert the integer matrix.
  const int det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  if (det != 1) throw NotSymplecticError("recovered frequency map has determinant " + std::to_string(det));
  Eigen::Matrix2i L;
  L << M(1, 1), -M(0, 1), -M(1, 0), M(0, 0);
  return L;
}

TorusDecomposition decompose_torus(const TorusOracle& g, int depth, double prune) {
  const TorusGrid& grid = g.grid;
  const double h = grid.h();
  TorusDecomposition out;
  out.L = recover_cat_matrix(g);
  const CMatrix F = metaplectic_cat(out.L, grid).matrix;
  CMatrix W = CMatrix::Identity(grid.N, grid.N), Winv = W;

  const std::vector<std::pair<int, int>> probe_freqs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  std::vector<CMatrix> probes, images;
  for (const auto& [m, n] : probe_freqs) {
    probes.push_back(op_exp(m, n, grid));
    images.push_back(F.adjoint() * g.apply(probes.back()) * F);
  }
  auto reduced = [&](std::size_t c) -> CMatrix { return Winv * images[c] * W; };
  auto residual = [&]() {
    double r = 0.0;
    for (std::size_t c = 0; c < probes.size(); ++c) r = std::max(r, spectral_norm(reduced(c) - probes[c]));
    return r;
  };
  out.principal_defect = residual();
  if (out.principal_defect > 0.5)
    throw KappaMismatchError("reduced oracle moves principal symbols by " + std::to_string(out.principal_defect));
  out.residuals.push_back(out.principal_defect);

  const double two_pi = 2.0 * std::acos(-1.0);
  for (int l = 1; l <= depth; ++l) {
    const double hl = std::pow(h, l);
    auto beta = [&](std::size_t c) {
      const CMatrix D = (reduced(c) - probes[c]) / hl;
      const auto [m, n] = probe_freqs[c];
      return (weyl_symbol(WeylOperator{grid, D}) * TrigSymbol::exponential(-m, -n)) * Complex(1.0 / (two_pi * kI));
    };
    const TrigSymbol gamma = beta(0);  // d_xi f
    const TrigSymbol delta = beta(1);  // -d_x f
    // Least-squares potential: 2 pi i n f = gamma, -2 pi i m f = delta.
    TrigSymbol f;
    std::map<Frequency, std::pair<Complex, Complex>> gd;
    for (const auto& [k, v] : gamma.terms()) gd[k].first = v;
    for (const auto& [k, v] : delta.terms()) gd[k].second = v;
    for (const auto& [k, v] : gd) {
      const auto [m, n] = k;
      if (m == 0 && n == 0) continue;
      const Complex a(0.0, two_pi * n), b(0.0, -two_pi * m);
      f.add(m, n, (std::conj(a) * v.first + std::conj(b) * v.second) / (std::norm(a) + std::norm(b)));
    }
    f = (f + f.conj()) * Complex(0.5);
    double top = 0.0;
    for (const auto& [k, v] : f.terms()) top = std::max(top, std::abs(v));
    f = f.pruned(prune * top);
    out.potentials.push_back(f);
    const CMatrix C = exp_quantized(f, std::pow(h, l - 1), grid);
    W = W * C;
    Winv = C.inverse() * Winv;
    out.residuals.push_back(residual());
  }
  return out;
}

}  // namespace psido
