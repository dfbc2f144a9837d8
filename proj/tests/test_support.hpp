#pragma once

#include <random>

#include "psido/h_expansion.hpp"

namespace testing_support {

using psido::Complex;
using psido::PhaseSpace;
using psido::PolySymbol;

/// Random polynomial with `terms` monomials of total degree <= max_deg.
inline PolySymbol random_poly(std::mt19937_64& rng, PhaseSpace ps, int max_deg, int terms, bool real = false) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> var(0, ps.dim() - 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolySymbol p(ps);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(static_cast<std::size_t>(ps.dim()), 0);
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) ++e[static_cast<std::size_t>(var(rng))];
    p.add_term(psido::make_exponent(e), Complex(coef(rng), real ? 0.0 : coef(rng)));
  }
  return p;
}

inline psido::HExpansion random_expansion(std::mt19937_64& rng, PhaseSpace ps, int max_deg, int terms, int trunc,
                                          bool real = false) {
  std::vector<PolySymbol> c;
  for (int j = 0; j <= trunc; ++j) c.push_back(random_poly(rng, ps, max_deg, terms, real));
  return psido::HExpansion::from_coeffs(c, trunc);
}

inline psido::Point point(std::initializer_list<double> v) {
  psido::Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) p[k++] = x;
  return p;
}

}  // namespace testing_support
