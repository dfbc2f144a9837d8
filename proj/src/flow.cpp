#include "psido/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace psido {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SymbolDim {
  int operator()(const PolySymbol& p) const { return p.space().dim(); }
  int operator()(const TrigSymbol&) const { return 2; }
};

}  // namespace

int symbol_dim(const HamiltonianSymbol& q) { return std::visit(SymbolDim{}, q); }

double symbol_value(const HamiltonianSymbol& q, const Point& rho) {
  if (const auto* p = std::get_if<PolySymbol>(&q)) return p->evaluate(rho).real();
  return std::get<TrigSymbol>(q).evaluate(rho).real();
}

Point symbol_gradient(const HamiltonianSymbol& q, const Point& rho) {
  const int d = symbol_dim(q);
  Point g(d);
  if (const auto* p = std::get_if<PolySymbol>(&q)) {
    for (int v = 0; v < d; ++v) g[v] = p->derivative(v).evaluate(rho).real();
    return g;
  }
  g.setZero();
  for (const auto& [k, c] : std::get<TrigSymbol>(q).terms()) {
    const Complex e = c * std::exp(Complex(0.0, kTwoPi * (k.first * rho[0] + k.second * rho[1])));
    const Complex de = Complex(0.0, kTwoPi) * e;
    g[0] += (de * double(k.first)).real();
    g[1] += (de * double(k.second)).real();
  }
  return g;
}

Matrix symbol_hessian(const HamiltonianSymbol& q, const Point& rho) {
  const int d = symbol_dim(q);
  Matrix H = Matrix::Zero(d, d);
  if (const auto* p = std::get_if<PolySymbol>(&q)) {
    for (int a = 0; a < d; ++a) {
      const PolySymbol da = p->derivative(a);
      for (int b = a; b < d; ++b) H(a, b) = H(b, a) = da.derivative(b).evaluate(rho).real();
    }
    return H;
  }
  for (const auto& [k, c] : std::get<TrigSymbol>(q).terms()) {
    const Complex e = c * std::exp(Complex(0.0, kTwoPi * (k.first * rho[0] + k.second * rho[1])));
    const double w = -(kTwoPi * kTwoPi) * e.real();
    const double kk[2] = {double(k.first), double(k.second)};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) H(a, b) += w * kk[a] * kk[b];
  }
  return H;
}

double TimeProfile::operator()(double t) const {
  double s = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * t + *it;
  return s;
}

double TimeProfile::integral(double a, double b) const {
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    s += coeffs[k] * (std::pow(b, double(k + 1)) - std::pow(a, double(k + 1))) / double(k + 1);
  return s;
}

HamiltonianPath HamiltonianPath::autonomous(HamiltonianSymbol q, double t1) {
  HamiltonianPath p;
  p.terms.push_back({std::move(q), TimeProfile::constant(1.0)});
  p.t1 = t1;
  return p;
}

int HamiltonianPath::dim() const {
  if (terms.empty()) throw DomainError("Hamiltonian path has no terms");
  return symbol_dim(terms.front().symbol);
}

Point HamiltonianPath::field(double t, const Point& rho) const {
  const int d = dim();
  const int n = d / 2;
  Point g = Point::Zero(d);
  for (const auto& term : terms) g += term.profile(t) * symbol_gradient(term.symbol, rho);
  Point x(d);
  x.head(n) = g.tail(n);
  x.tail(n) = -g.head(n);
  return x;
}

Matrix HamiltonianPath::field_jacobian(double t, const Point& rho) const {
  const int d = dim();
  Matrix H = Matrix::Zero(d, d);
  for (const auto& term : terms) H += term.profile(t) * symbol_hessian(term.symbol, rho);
  return canonical_form(d / 2) * H;
}

HamiltonianPath HamiltonianPath::reversed() const {
  HamiltonianPath out = *this;
  const double c = t0 + t1;
  for (auto& term : out.terms) {
    // g(t) = -f(c - t), expanded binomially.
    const auto& f = term.profile.coeffs;
    std::vector<double> g(f.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k) {
      double binom = 1.0;
      for (std::size_t j = 0; j <= k; ++j) {
        g[j] -= f[k] * binom * std::pow(c, double(k - j)) * ((j % 2) ? -1.0 : 1.0);
        binom = binom * double(k - j) / double(j + 1);
      }
    }
    term.profile.coeffs = g;
  }
  return out;
}

std::pair<Point, Matrix> integrate_flow(const HamiltonianPath& path, const Point& rho0, int steps) {
  if (steps < 1) throw ResolutionError("flow needs at least one step");
  const int d = path.dim();
  if (rho0.size() != d) throw DimensionError("initial point does not match the path's phase space");
  const double dt = (path.t1 - path.t0) / steps;
  const Matrix I = Matrix::Identity(d, d);
  Point y = rho0;
  Matrix J = I;
  for (int s = 0; s < steps; ++s) {
    const double tm = path.t0 + (s + 0.5) * dt;
    Point next = y + dt * path.field(tm, y);
    bool converged = false;
    for (int it = 0; it < 60 && !converged; ++it) {
      const Point mid = 0.5 * (y + next);
      const Point G = next - y - dt * path.field(tm, mid);
      const Matrix DG = I - 0.5 * dt * path.field_jacobian(tm, mid);
      const Point delta = DG.partialPivLu().solve(G);
      next -= delta;
      if (!next.allFinite()) throw BlowUpError("trajectory left the finite range");
      converged = delta.norm() <= 1e-14 * (1.0 + next.norm());
    }
    if (!converged) throw BlowUpError("implicit midpoint step did not converge; trajectory escapes");
    const Matrix A = 0.5 * dt * path.field_jacobian(tm, 0.5 * (y + next));
    J = (I - A).partialPivLu().solve((I + A) * J);
    y = next;
    if (!y.allFinite() || !J.allFinite()) throw BlowUpError("trajectory left the finite range");
  }
  return {y, J};
}

SymplecticMap SymplecticMap::identity(int dim) { return linear(Matrix::Identity(dim, dim)); }

SymplecticMap SymplecticMap::linear(Matrix M, Point offset) {
  if (M.rows() != M.cols() || M.rows() % 2 != 0) throw DimensionError("linear map must be 2n x 2n");
  SymplecticMap k;
  k.kind_ = MapKind::Linear;
  k.dim_ = static_cast<int>(M.rows());
  k.offset_ = offset.size() == 0 ? Point(Point::Zero(k.dim_)) : offset;
  if (k.offset_.size() != k.dim_) throw DimensionError("translation has the wrong dimension");
  k.M_ = std::move(M);
  k.label_ = "linear";
  return k;
}

SymplecticMap SymplecticMap::polynomial(std::vector<PolySymbol> components) {
  if (components.empty()) throw DimensionError("polynomial map needs components");
  const int d = components.front().space().dim();
  if (static_cast<int>(components.size()) != d) throw DimensionError("polynomial map needs 2n components");
  SymplecticMap k;
  k.kind_ = MapKind::Polynomial;
  k.dim_ = d;
  k.components_ = std::move(components);
  k.label_ = "polynomial";
  return k;
}

SymplecticMap SymplecticMap::flow(HamiltonianPath path, int steps) {
  if (steps < 1) throw ResolutionError("flow needs at least one step");
  SymplecticMap k;
  k.kind_ = MapKind::Flow;
  k.dim_ = path.dim();
  k.path_ = std::move(path);
  k.steps_ = steps;
  k.label_ = "flow";
  return k;
}

SymplecticMap SymplecticMap::function(int dim, Evaluator f, std::string label) {
  SymplecticMap k;
  k.kind_ = MapKind::Function;
  k.dim_ = dim;
  k.eval_ = std::move(f);
  k.label_ = std::move(label);
  return k;
}

SymplecticMap SymplecticMap::torus_linear(const Eigen::Matrix2i& L) {
  if (L.determinant() != 1) throw NotSymplecticError("torus map must have determinant 1");
  SymplecticMap k = linear(L.transpose().cast<double>());
  k.periodic_ = true;
  k.label_ = "torus_linear";
  return k;
}

SymplecticMap SymplecticMap::with_domain(Region r) const {
  SymplecticMap k = *this;
  k.domain_ = std::move(r);
  return k;
}

std::pair<Point, Matrix> SymplecticMap::apply(const Point& rho) const {
  if (rho.size() != dim_) throw DimensionError("point dimension does not match the map");
  if (domain_ && !domain_->contains(rho, 1e-12)) throw DomainError("sample lies outside the map's domain");
  switch (kind_) {
    case MapKind::Linear: {
      Point out = M_ * rho + offset_;
      if (periodic_) out = out.array() - out.array().floor();
      return {out, M_};
    }
    case MapKind::Polynomial: {
      Point out(dim_);
      Matrix J(dim_, dim_);
      for (int a = 0; a < dim_; ++a) {
        out[a] = components_[a].evaluate(rho).real();
        for (int b = 0; b < dim_; ++b) J(a, b) = components_[a].derivative(b).evaluate(rho).real();
      }
      return {out, J};
    }
    case MapKind::Flow:
      return integrate_flow(*path_, rho, steps_);
    case MapKind::Function:
      return eval_(rho);
  }
  throw Error("unknown map kind");
}

SymplecticMap SymplecticMap::inverse() const {
  switch (kind_) {
    case MapKind::Linear: {
      const Matrix Minv = M_.inverse();
      SymplecticMap k = linear(Minv, -Minv * offset_);
      k.periodic_ = periodic_;
      k.label_ = label_ + "^-1";
      return k;
    }
    case MapKind::Flow: {
      SymplecticMap k = flow(path_->reversed(), steps_);
      k.label_ = label_ + "^-1";
      return k;
    }
    default:
      throw DomainError("inverse is only available for linear and flow maps");
  }
}

SymplecticMap SymplecticMap::compose(const SymplecticMap& other) const {
  if (other.dim_ != dim_) throw DimensionError("cannot compose maps of different dimension");
  if (kind_ == MapKind::Linear && other.kind_ == MapKind::Linear && !periodic_ && !other.periodic_)
    return linear(M_ * other.M_, M_ * other.offset_ + offset_);
  const SymplecticMap outer = *this;
  const SymplecticMap inner = other;
  return function(
      dim_,
      [outer, inner](const Point& rho) {
        const auto [p, Jp] = inner.apply(rho);
        const auto [q, Jq] = outer.apply(p);
        return std::make_pair(q, Matrix(Jq * Jp));
      },
      label_ + " o " + other.label_);
}

double symplectic_defect(const Matrix& J) {
  const Matrix Om = canonical_form(static_cast<int>(J.rows()) / 2);
  const Matrix D = J.transpose() * Om * J - Om;
  return Eigen::JacobiSVD<Matrix>(D).singularValues()(0);
}

double check_symplectic(const SymplecticMap& kappa, const std::vector<Point>& samples) {
  double worst = 0.0;
  for (const auto& p : samples) worst = std::max(worst, symplectic_defect(kappa.jacobian(p)));
  return worst;
}

PolySymbol pullback(const PolySymbol& a, const SymplecticMap& kappa) {
  const PhaseSpace ps = a.space();
  if (ps.dim() != kappa.dim()) throw DimensionError("symbol and map live on different phase spaces");
  if (kappa.kind() == MapKind::Polynomial) return compose(a, kappa.components());
  if (kappa.kind() == MapKind::Linear) {
    std::vector<PolySymbol> comps;
    for (int r = 0; r < ps.dim(); ++r) {
      PolySymbol c = PolySymbol::constant(ps, kappa.offset()[r]);
      for (int s = 0; s < ps.dim(); ++s)
        if (kappa.matrix()(r, s) != 0.0) c += PolySymbol::coordinate(ps, s) * Complex(kappa.matrix()(r, s));
      comps.push_back(c);
    }
    return compose(a, comps);
  }
  throw NotPolynomialError("exact pullback needs a linear or polynomial map; use the sampled pullback");
}

TrigSymbol pullback(const TrigSymbol& a, const Eigen::Matrix2i& L) {
  // kappa(rho) = L^T rho, so a o kappa has frequencies L k.
  return a.compose_linear(L.transpose());
}

SampledSymbol pullback(const std::function<Complex(const Point&)>& a, const SymplecticMap& kappa,
                       const UniformGrid& grid) {
  if (grid.dim() != kappa.dim()) throw DimensionError("grid and map dimensions differ");
  return SampledSymbol::sample(grid, [&](const Point& p) { return a(kappa(p)); });
}

std::function<Complex(const Point&)> pullback_fn(std::function<Complex(const Point&)> a, SymplecticMap kappa) {
  return [a = std::move(a), kappa = std::move(kappa)](const Point& p) { return a(kappa(p)); };
}

HamiltonianPath path_from_linear(const Matrix& M) {
  const int d = static_cast<int>(M.rows());
  if (symplectic_defect(M) > 1e-10) throw NotSymplecticError("matrix is not symplectic");
  const Eigen::EigenSolver<Matrix> es(M);
  for (const auto& ev : es.eigenvalues())
    if (std::abs(ev.imag()) < 1e-12 && ev.real() <= 0.0)
      throw DomainError("matrix has a nonpositive real eigenvalue; no real logarithm");
  const Matrix A = M.log();
  const Matrix S = -canonical_form(d / 2) * A;
  const Matrix Ssym = 0.5 * (S + S.transpose());
  const PhaseSpace ps(d / 2);
  PolySymbol q(ps);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (Ssym(a, b) != 0.0)
        q += PolySymbol::coordinate(ps, a) * PolySymbol::coordinate(ps, b) * Complex(0.5 * Ssym(a, b));
  return HamiltonianPath::autonomous(q.pruned(1e-15));
}

nlohmann::json map_dump(const SymplecticMap& kappa, const std::vector<Point>& samples) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : samples) {
    const auto [q, J] = kappa.apply(p);
    std::vector<std::vector<double>> jac(J.rows(), std::vector<double>(J.cols()));
    for (int r = 0; r < J.rows(); ++r)
      for (int c = 0; c < J.cols(); ++c) jac[r][c] = J(r, c);
    out.push_back({{"in", std::vector<double>(p.data(), p.data() + p.size())},
                   {"out", std::vector<double>(q.data(), q.data() + q.size())},
                   {"jacobian", jac}});
  }
  return out;
}

}  // namespace psido
