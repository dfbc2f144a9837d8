#include "psido/h_expansion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psido {

HExpansion::HExpansion(PhaseSpace space, int order, int trunc)
    : space_(space), order_(order), trunc_(trunc), zero_(space) {
  const int count = std::max(0, trunc + order + 1);
  coeffs_.assign(static_cast<std::size_t>(count), PolySymbol(space));
}

HExpansion HExpansion::from_coeffs(std::vector<PolySymbol> coeffs, int trunc) {
  if (coeffs.empty()) throw DimensionError("from_coeffs needs at least one coefficient");
  if (static_cast<int>(coeffs.size()) > trunc + 1)
    throw TruncationError("more coefficients supplied than the truncation depth allows");
  HExpansion out(coeffs.front().space(), 0, trunc);
  for (std::size_t j = 0; j < coeffs.size(); ++j) out.set_coeff(static_cast<int>(j), std::move(coeffs[j]));
  return out;
}

HExpansion HExpansion::principal(const PolySymbol& p, int trunc) {
  HExpansion out(p.space(), 0, trunc);
  out.set_coeff(0, p);
  return out;
}

HExpansion HExpansion::constant(PhaseSpace space, Complex c, int trunc) {
  return principal(PolySymbol::constant(space, c), trunc);
}

const PolySymbol& HExpansion::coeff(int j) const {
  if (j > trunc_)
    throw TruncationError("coefficient h^" + std::to_string(j) + " requested beyond truncation K=" +
                          std::to_string(trunc_));
  if (j < lowest_power()) return zero_;
  return coeffs_[static_cast<std::size_t>(j + order_)];
}

void HExpansion::set_coeff(int j, PolySymbol p) {
  if (j > trunc_) throw TruncationError("cannot store a coefficient beyond truncation");
  if (j < lowest_power()) throw DomainError("coefficient below the class start of the expansion");
  if (!(p.space() == space_) || p.extra_vars() != 0) throw DimensionError("coefficient on a different phase space");
  coeffs_[static_cast<std::size_t>(j + order_)] = std::move(p);
}

HExpansion HExpansion::truncated(int k) const {
  if (k > trunc_) throw TruncationError("cannot extend a truncation");
  HExpansion out(space_, order_, k);
  for (int j = lowest_power(); j <= k; ++j) out.set_coeff(j, coeff(j));
  return out;
}

HExpansion HExpansion::times_h_power(int k) const {
  if (k < 0) throw DomainError("times_h_power needs k >= 0");
  HExpansion out(space_, order_ - k, trunc_ + k);
  for (int j = lowest_power(); j <= trunc_; ++j) out.set_coeff(j + k, coeff(j));
  return out;
}

Complex HExpansion::evaluate(const Point& rho, double h) const {
  if (rho.size() != space_.dim()) throw DimensionError("evaluation point has wrong dimension");
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("h must lie in (0, 1]");
  Complex acc = 0.0;
  for (int j = lowest_power(); j <= trunc_; ++j) acc += std::pow(h, j) * coeff(j).evaluate(rho);
  return acc;
}

double HExpansion::max_abs(int from, int to) const {
  double m = 0.0;
  for (int j = std::max(from, lowest_power()); j <= std::min(to, trunc_); ++j)
    m = std::max(m, coeff(j).max_abs_coefficient());
  return m;
}

int HExpansion::leading_power(double tol) const {
  for (int j = lowest_power(); j <= trunc_; ++j)
    if (coeff(j).max_abs_coefficient() > tol) return j;
  return trunc_ + 1;
}

HExpansion& HExpansion::operator+=(const HExpansion& o) {
  if (!(space_ == o.space_)) throw DimensionError("adding expansions on different phase spaces");
  const int new_order = std::max(order_, o.order_);
  const int new_trunc = std::min(trunc_, o.trunc_);
  HExpansion out(space_, new_order, new_trunc);
  for (int j = out.lowest_power(); j <= new_trunc; ++j) out.set_coeff(j, coeff(j) + o.coeff(j));
  *this = std::move(out);
  return *this;
}

HExpansion& HExpansion::operator-=(const HExpansion& o) { return *this += -o; }

HExpansion& HExpansion::operator*=(Complex c) {
  for (auto& p : coeffs_) p *= c;
  return *this;
}

}  // namespace psido
