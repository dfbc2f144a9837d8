#pragma once

#include <functional>
#include <vector>

#include "psido/h_expansion.hpp"

namespace psido {

/// Tensor grid of `per_axis` equally spaced nodes on [lo_k, hi_k] per axis,
/// endpoints included. Axis 0 varies fastest in the flat index.
class UniformGrid {
 public:
  UniformGrid(Point lo, Point hi, int per_axis);
  /// Centered cube of half-width `half_width` around `center`.
  static UniformGrid around(const Point& center, double half_width, int per_axis);

  int dim() const { return static_cast<int>(lo_.size()); }
  int per_axis() const { return per_axis_; }
  std::size_t size() const { return size_; }
  double spacing(int axis) const { return (hi_[axis] - lo_[axis]) / (per_axis_ - 1); }
  const Point& lower() const { return lo_; }
  const Point& upper() const { return hi_; }

  Point point(std::size_t flat) const;
  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::vector<int>& idx) const;
  std::size_t stride(int axis) const;
  /// Index of the node at p, or throws if p is not (within 1e-9 spacing) a node.
  std::size_t node_at(const Point& p) const;
  /// Nodes at least `margin` nodes away from every face.
  std::vector<std::size_t> interior(int margin) const;

  friend bool operator==(const UniformGrid& a, const UniformGrid& b) {
    return a.per_axis_ == b.per_axis_ && a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  Point lo_, hi_;
  int per_axis_;
  std::size_t size_;
};

/// Complex values on a UniformGrid.
struct SampledSymbol {
  UniformGrid grid;
  std::vector<Complex> values;

  static SampledSymbol sample(const UniformGrid& grid, const std::function<Complex(const Point&)>& f);
  static SampledSymbol from_poly(const UniformGrid& grid, const PolySymbol& p);
  static SampledSymbol zeros(const UniformGrid& grid);

  Complex at(const Point& node) const { return values[grid.node_at(node)]; }
  /// 4th-order finite difference of order `order` along `axis` (one-sided
  /// stencils at the faces).
  SampledSymbol derivative(int axis, int order = 1) const;
  SampledSymbol derivative(const Exponent& alpha) const;
  /// Max modulus over the given flat indices (all nodes when empty).
  double max_abs(const std::vector<std::size_t>& nodes = {}) const;

  SampledSymbol& operator+=(const SampledSymbol& o);
  SampledSymbol& operator-=(const SampledSymbol& o);
  SampledSymbol& operator*=(Complex c);
  friend SampledSymbol operator+(SampledSymbol a, const SampledSymbol& b) { return a += b; }
  friend SampledSymbol operator-(SampledSymbol a, const SampledSymbol& b) { return a -= b; }
  friend SampledSymbol operator*(SampledSymbol a, Complex c) { return a *= c; }
  friend SampledSymbol operator*(const SampledSymbol& a, const SampledSymbol& b);
};

/// chi * a on the grid. Equals a exactly wherever chi == 1.
SampledSymbol apply_cutoff(const PolySymbol& a, const Cutoff& chi, const UniformGrid& grid);

/// h-expansion whose coefficients are sampled functions (order 0 only).
struct SampledExpansion {
  PhaseSpace space;
  int trunc = 0;
  std::vector<SampledSymbol> coeffs;  // h^0 .. h^trunc

  static SampledExpansion from_poly(const HExpansion& a, const UniformGrid& grid);
  static SampledExpansion from_function(PhaseSpace space, const UniformGrid& grid,
                                        const std::function<Complex(const Point&)>& a0, int trunc);
  const UniformGrid& grid() const { return coeffs.front().grid; }
  const SampledSymbol& coeff(int j) const;
  double max_abs(int from, int to, const std::vector<std::size_t>& nodes) const;
};

SampledExpansion operator-(const SampledExpansion& a, const SampledExpansion& b);

}  // namespace psido
