#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <vector>

#include "psido/phase_space.hpp"

namespace psido {

using Complex = std::complex<double>;

inline constexpr int kMaxVars = 8;
using Exponent = std::array<std::uint8_t, kMaxVars>;

Exponent make_exponent(std::initializer_list<int> e);
Exponent make_exponent(const std::vector<int>& e);
int total_degree(const Exponent& e, int nvars);

/// Complex polynomial in the phase-space coordinates (x, xi), optionally
/// carrying trailing auxiliary variables (used for a time parameter).
/// Terms are stored sparsely; exact zeros are never stored.
class PolySymbol {
 public:
  PolySymbol() : PolySymbol(PhaseSpace{}) {}
  explicit PolySymbol(PhaseSpace space, int extra_vars = 0);

  static PolySymbol constant(PhaseSpace space, Complex c, int extra_vars = 0);
  /// Coordinate function number k in (x_1..x_n, xi_1..xi_n, aux...) order.
  static PolySymbol coordinate(PhaseSpace space, int k, int extra_vars = 0);
  static PolySymbol x(PhaseSpace space, int j) { return coordinate(space, space.x_index(j)); }
  static PolySymbol xi(PhaseSpace space, int j) { return coordinate(space, space.xi_index(j)); }
  static PolySymbol monomial(PhaseSpace space, const std::vector<int>& exps, Complex c,
                             int extra_vars = 0);

  const PhaseSpace& space() const { return space_; }
  int nvars() const { return space_.dim() + extra_; }
  int extra_vars() const { return extra_; }
  const std::map<Exponent, Complex>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  void add_term(const Exponent& e, Complex c);
  Complex coefficient(const Exponent& e) const;
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Complex constant_term() const;
  int degree() const;
  double max_abs_coefficient() const;

  PolySymbol derivative(int var, int order = 1) const;
  /// Mixed partial d^alpha over all variables.
  PolySymbol derivative(const Exponent& alpha) const;

  Complex evaluate(const Point& p) const;
  Complex evaluate(const double* p) const;

  PolySymbol conj() const;
  PolySymbol real_part() const;
  PolySymbol pruned(double tol) const;
  /// Same polynomial viewed in a ring with `extra` auxiliary variables.
  PolySymbol with_extra_vars(int extra) const;
  /// Substitute a value for the last auxiliary variable and drop it.
  PolySymbol substitute_last(Complex value) const;
  /// Antiderivative in variable `var` vanishing at 0.
  PolySymbol integrate(int var) const;
  PolySymbol pow(int k) const;

  PolySymbol& operator+=(const PolySymbol& o);
  PolySymbol& operator-=(const PolySymbol& o);
  PolySymbol& operator*=(Complex c);

  friend PolySymbol operator+(PolySymbol a, const PolySymbol& b) { return a += b; }
  friend PolySymbol operator-(PolySymbol a, const PolySymbol& b) { return a -= b; }
  friend PolySymbol operator*(PolySymbol a, Complex c) { return a *= c; }
  friend PolySymbol operator*(Complex c, PolySymbol a) { return a *= c; }
  friend PolySymbol operator-(PolySymbol a) { return a *= Complex(-1.0); }
  friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b);
  friend bool operator==(const PolySymbol& a, const PolySymbol& b) {
    return a.space_ == b.space_ && a.extra_ == b.extra_ && a.terms_ == b.terms_;
  }

 private:
  void check_compatible(const PolySymbol& o) const;

  PhaseSpace space_;
  int extra_ = 0;
  std::map<Exponent, Complex> terms_;
};

/// Largest coefficient modulus of a - b.
double max_coeff_diff(const PolySymbol& a, const PolySymbol& b);

/// {a, b} = sum_j (d_xi_j a d_x_j b - d_x_j a d_xi_j b), so that {a, b} = H_a b.
PolySymbol poisson_bracket(const PolySymbol& a, const PolySymbol& b);

/// H_f(p) = {f, p}.
PolySymbol hamiltonian_field_apply(const PolySymbol& f, const PolySymbol& p);

/// a(phi_1(rho), ..., phi_2n(rho)): substitution of polynomial components.
PolySymbol compose(const PolySymbol& a, const std::vector<PolySymbol>& components);

}  // namespace psido
