#pragma once

#include <vector>

#include "psido/poly_symbol.hpp"

namespace psido {

/// Truncated formal series a = sum_{j=-m}^{K} h^j a_j with polynomial a_j.
///
/// `order` is the growth exponent m of the class S^m (so the series starts at
/// h^{-m}); `trunc` is the last power K that is known. Asking for a
/// coefficient above K is an error: those coefficients are unknown, not zero.
class HExpansion {
 public:
  HExpansion() = default;
  HExpansion(PhaseSpace space, int order, int trunc);

  /// Order-0 expansion from an explicit coefficient list a_0..a_{coeffs.size()-1}.
  static HExpansion from_coeffs(std::vector<PolySymbol> coeffs, int trunc);
  /// The polynomial p placed at h^0, known through h^trunc.
  static HExpansion principal(const PolySymbol& p, int trunc);
  static HExpansion constant(PhaseSpace space, Complex c, int trunc);

  const PhaseSpace& space() const { return space_; }
  int order() const { return order_; }
  int trunc() const { return trunc_; }
  int lowest_power() const { return -order_; }

  /// Coefficient of h^j. Zero below the class start, error above trunc.
  const PolySymbol& coeff(int j) const;
  void set_coeff(int j, PolySymbol p);

  /// Same series, truncated further (k <= trunc).
  HExpansion truncated(int k) const;
  /// Multiply by h^k (k >= 0): shifts every coefficient up.
  HExpansion times_h_power(int k) const;
  /// Apply a polynomial map coefficient-wise.
  template <class F>
  HExpansion map_coeffs(F&& f) const {
    HExpansion out(space_, order_, trunc_);
    for (int j = lowest_power(); j <= trunc_; ++j) out.set_coeff(j, f(coeff(j)));
    return out;
  }

  Complex evaluate(const Point& rho, double h) const;

  /// Largest coefficient modulus over powers [from, to] (clamped to the stored range).
  double max_abs(int from, int to) const;
  double max_abs() const { return max_abs(lowest_power(), trunc_); }
  /// Smallest power whose coefficient exceeds tol, or trunc+1 if none does.
  int leading_power(double tol) const;

  HExpansion& operator+=(const HExpansion& o);
  HExpansion& operator-=(const HExpansion& o);
  HExpansion& operator*=(Complex c);
  friend HExpansion operator+(HExpansion a, const HExpansion& b) { return a += b; }
  friend HExpansion operator-(HExpansion a, const HExpansion& b) { return a -= b; }
  friend HExpansion operator*(HExpansion a, Complex c) { return a *= c; }
  friend HExpansion operator*(Complex c, HExpansion a) { return a *= c; }
  friend HExpansion operator-(HExpansion a) { return a *= Complex(-1.0); }
  friend bool operator==(const HExpansion&, const HExpansion&) = default;

 private:
  PhaseSpace space_;
  int order_ = 0;
  int trunc_ = 0;
  std::vector<PolySymbol> coeffs_;
  PolySymbol zero_;
};

}  // namespace psido
