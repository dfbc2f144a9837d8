#include "psido/poly_symbol.hpp"

#include <algorithm>
#include <cmath>

namespace psido {

Exponent make_exponent(std::initializer_list<int> e) {
  return make_exponent(std::vector<int>(e));
}

Exponent make_exponent(const std::vector<int>& e) {
  if (e.size() > kMaxVars) throw DimensionError("too many variables for an exponent");
  Exponent out{};
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (e[k] < 0 || e[k] > 255) throw DomainError("exponent entry out of range");
    out[k] = static_cast<std::uint8_t>(e[k]);
  }
  return out;
}

int total_degree(const Exponent& e, int nvars) {
  int d = 0;
  for (int k = 0; k < nvars; ++k) d += e[k];
  return d;
}

PolySymbol::PolySymbol(PhaseSpace space, int extra_vars) : space_(space), extra_(extra_vars) {
  if (nvars() > kMaxVars) throw DimensionError("polynomial has too many variables");
  if (extra_vars < 0) throw DimensionError("negative auxiliary variable count");
}

PolySymbol PolySymbol::constant(PhaseSpace space, Complex c, int extra_vars) {
  PolySymbol p(space, extra_vars);
  p.add_term(Exponent{}, c);
  return p;
}

PolySymbol PolySymbol::coordinate(PhaseSpace space, int k, int extra_vars) {
  PolySymbol p(space, extra_vars);
  if (k < 0 || k >= p.nvars()) throw DimensionError("coordinate index out of range");
  Exponent e{};
  e[k] = 1;
  p.add_term(e, 1.0);
  return p;
}

PolySymbol PolySymbol::monomial(PhaseSpace space, const std::vector<int>& exps, Complex c,
                                int extra_vars) {
  PolySymbol p(space, extra_vars);
  if (static_cast<int>(exps.size()) != p.nvars()) throw DimensionError("monomial exponent length mismatch");
  p.add_term(make_exponent(exps), c);
  return p;
}

void PolySymbol::add_term(const Exponent& e, Complex c) {
  for (int k = nvars(); k < kMaxVars; ++k)
    if (e[k] != 0) throw DimensionError("exponent uses a variable outside the ring");
  if (c == Complex(0.0)) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex(0.0)) terms_.erase(it);
  }
}

Complex PolySymbol::coefficient(const Exponent& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? Complex(0.0) : it->second;
}

bool PolySymbol::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == Exponent{});
}

Complex PolySymbol::constant_term() const { return coefficient(Exponent{}); }

int PolySymbol::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e, nvars()));
  return d;
}

double PolySymbol::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

PolySymbol PolySymbol::derivative(int var, int order) const {
  if (var < 0 || var >= nvars()) throw DimensionError("derivative variable out of range");
  PolySymbol out(space_, extra_);
  for (const auto& [e, c] : terms_) {
    if (e[var] < order) continue;
    double factor = 1.0;
    for (int k = 0; k < order; ++k) factor *= e[var] - k;
    Exponent d = e;
    d[var] = static_cast<std::uint8_t>(e[var] - order);
    out.add_term(d, c * factor);
  }
  return out;
}

PolySymbol PolySymbol::derivative(const Exponent& alpha) const {
  PolySymbol out(space_, extra_);
  for (const auto& [e, c] : terms_) {
    double factor = 1.0;
    Exponent d = e;
    bool vanishes = false;
    for (int v = 0; v < nvars() && !vanishes; ++v) {
      if (e[v] < alpha[v]) {
        vanishes = true;
        break;
      }
      for (int k = 0; k < alpha[v]; ++k) factor *= e[v] - k;
      d[v] = static_cast<std::uint8_t>(e[v] - alpha[v]);
    }
    if (!vanishes) out.add_term(d, c * factor);
  }
  return out;
}

Complex PolySymbol::evaluate(const Point& p) const {
  if (p.size() != nvars()) throw DimensionError("evaluation point has wrong dimension");
  return evaluate(p.data());
}

Complex PolySymbol::evaluate(const double* p) const {
  const int nv = nvars();
  const int deg = degree();
  // powers[v][k] = p[v]^k
  std::vector<double> powers(static_cast<std::size_t>(nv) * (deg + 1), 1.0);
  for (int v = 0; v < nv; ++v)
    for (int k = 1; k <= deg; ++k) powers[v * (deg + 1) + k] = powers[v * (deg + 1) + k - 1] * p[v];
  Complex acc = 0.0;
  for (const auto& [e, c] : terms_) {
    double m = 1.0;
    for (int v = 0; v < nv; ++v) m *= powers[v * (deg + 1) + e[v]];
    acc += c * m;
  }
  return acc;
}

PolySymbol PolySymbol::conj() const {
  PolySymbol out(space_, extra_);
  for (const auto& [e, c] : terms_) out.add_term(e, std::conj(c));
  return out;
}

PolySymbol PolySymbol::real_part() const {
  PolySymbol out(space_, extra_);
  for (const auto& [e, c] : terms_) out.add_term(e, c.real());
  return out;
}

PolySymbol PolySymbol::pruned(double tol) const {
  PolySymbol out(space_, extra_);
  for (const auto& [e, c] : terms_)
    if (std::abs(c) > tol) out.add_term(e, c);
  return out;
}

PolySymbol PolySymbol::with_extra_vars(int extra) const {
  PolySymbol out(space_, extra);
  for (const auto& [e, c] : terms_) out.add_term(e, c);
  return out;
}

PolySymbol PolySymbol::substitute_last(Complex value) const {
  if (extra_ == 0) throw DimensionError("no auxiliary variable to substitute");
  const int v = nvars() - 1;
  PolySymbol out(space_, extra_ - 1);
  for (const auto& [e, c] : terms_) {
    Exponent d = e;
    d[v] = 0;
    out.add_term(d, c * std::pow(value, static_cast<int>(e[v])));
  }
  return out;
}

PolySymbol PolySymbol::integrate(int var) const {
  if (var < 0 || var >= nvars()) throw DimensionError("integration variable out of range");
  PolySymbol out(space_, extra_);
  for (const auto& [e, c] : terms_) {
    Exponent d = e;
    d[var] = static_cast<std::uint8_t>(e[var] + 1);
    out.add_term(d, c / static_cast<double>(e[var] + 1));
  }
  return out;
}

PolySymbol PolySymbol::pow(int k) const {
  if (k < 0) throw DomainError("negative polynomial power");
  PolySymbol out = constant(space_, 1.0, extra_);
  for (int i = 0; i < k; ++i) out = out * *this;
  return out;
}

void PolySymbol::check_compatible(const PolySymbol& o) const {
  if (!(space_ == o.space_) || extra_ != o.extra_)
    throw DimensionError("polynomials live on different phase spaces");
}

PolySymbol& PolySymbol::operator+=(const PolySymbol& o) {
  check_compatible(o);
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

PolySymbol& PolySymbol::operator-=(const PolySymbol& o) {
  check_compatible(o);
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

PolySymbol& PolySymbol::operator*=(Complex c) {
  if (c == Complex(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, v] : terms_) v *= c;
  return *this;
}

PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
  a.check_compatible(b);
  PolySymbol out(a.space_, a.extra_);
  const int nv = a.nvars();
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      Exponent e{};
      for (int v = 0; v < nv; ++v) {
        const int s = ea[v] + eb[v];
        if (s > 255) throw DomainError("polynomial degree overflow");
        e[v] = static_cast<std::uint8_t>(s);
      }
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

double max_coeff_diff(const PolySymbol& a, const PolySymbol& b) { return (a - b).max_abs_coefficient(); }

PolySymbol poisson_bracket(const PolySymbol& a, const PolySymbol& b) {
  if (!(a.space() == b.space()) || a.extra_vars() != b.extra_vars())
    throw DimensionError("poisson bracket of symbols on different phase spaces");
  const PhaseSpace& ps = a.space();
  PolySymbol out(ps, a.extra_vars());
  for (int j = 0; j < ps.n; ++j) {
    out += a.derivative(ps.xi_index(j)) * b.derivative(ps.x_index(j));
    out -= a.derivative(ps.x_index(j)) * b.derivative(ps.xi_index(j));
  }
  return out;
}

PolySymbol hamiltonian_field_apply(const PolySymbol& f, const PolySymbol& p) { return poisson_bracket(f, p); }

PolySymbol compose(const PolySymbol& a, const std::vector<PolySymbol>& components) {
  if (static_cast<int>(components.size()) != a.nvars())
    throw DimensionError("compose needs one component per variable");
  const PolySymbol& ref = components.front();
  PolySymbol out(ref.space(), ref.extra_vars());
  // Cache powers of each component.
  std::vector<std::vector<PolySymbol>> powers(components.size());
  for (const auto& [e, c] : a.terms()) {
    PolySymbol term = PolySymbol::constant(ref.space(), c, ref.extra_vars());
    for (int v = 0; v < a.nvars(); ++v) {
      auto& pv = powers[v];
      if (pv.empty()) pv.push_back(PolySymbol::constant(ref.space(), 1.0, ref.extra_vars()));
      while (static_cast<int>(pv.size()) <= e[v]) pv.push_back(pv.back() * components[v]);
      if (e[v] > 0) term = term * pv[e[v]];
    }
    out += term;
  }
  return out;
}

}  // namespace psido
