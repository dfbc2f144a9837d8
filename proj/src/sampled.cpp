#include "psido/sampled.hpp"

#include <algorithm>
#include <cmath>

namespace psido {

UniformGrid::UniformGrid(Point lo, Point hi, int per_axis)
    : lo_(std::move(lo)), hi_(std::move(hi)), per_axis_(per_axis), size_(1) {
  if (per_axis < 5) throw ResolutionError("uniform grid needs at least 5 nodes per axis");
  if (lo_.size() != hi_.size() || lo_.size() == 0) throw DimensionError("grid corners differ in dimension");
  if ((hi_.array() <= lo_.array()).any()) throw ResolutionError("grid box is empty");
  for (Eigen::Index k = 0; k < lo_.size(); ++k) size_ *= static_cast<std::size_t>(per_axis);
}

UniformGrid UniformGrid::around(const Point& center, double half_width, int per_axis) {
  return UniformGrid(center.array() - half_width, center.array() + half_width, per_axis);
}

std::size_t UniformGrid::stride(int axis) const {
  std::size_t s = 1;
  for (int k = 0; k < axis; ++k) s *= static_cast<std::size_t>(per_axis_);
  return s;
}

std::vector<int> UniformGrid::multi_index(std::size_t flat) const {
  std::vector<int> idx(static_cast<std::size_t>(dim()));
  for (int k = 0; k < dim(); ++k) {
    idx[k] = static_cast<int>(flat % per_axis_);
    flat /= per_axis_;
  }
  return idx;
}

std::size_t UniformGrid::flat_index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (int k = dim() - 1; k >= 0; --k) flat = flat * per_axis_ + static_cast<std::size_t>(idx[k]);
  return flat;
}

Point UniformGrid::point(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Point p(dim());
  for (int k = 0; k < dim(); ++k) p[k] = lo_[k] + idx[k] * spacing(k);
  return p;
}

std::size_t UniformGrid::node_at(const Point& p) const {
  if (p.size() != dim()) throw DimensionError("point dimension does not match grid");
  std::vector<int> idx(static_cast<std::size_t>(dim()));
  for (int k = 0; k < dim(); ++k) {
    const double t = (p[k] - lo_[k]) / spacing(k);
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-9 || r < 0 || r >= per_axis_) throw DomainError("point is not a grid node");
    idx[k] = static_cast<int>(r);
  }
  return flat_index(idx);
}

std::vector<std::size_t> UniformGrid::interior(int margin) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < size_; ++f) {
    const auto idx = multi_index(f);
    if (std::all_of(idx.begin(), idx.end(), [&](int i) { return i >= margin && i < per_axis_ - margin; }))
      out.push_back(f);
  }
  return out;
}

SampledSymbol SampledSymbol::sample(const UniformGrid& grid, const std::function<Complex(const Point&)>& f) {
  SampledSymbol s{grid, std::vector<Complex>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) s.values[i] = f(grid.point(i));
  return s;
}

SampledSymbol SampledSymbol::from_poly(const UniformGrid& grid, const PolySymbol& p) {
  if (p.nvars() != grid.dim()) throw DimensionError("polynomial and grid dimensions differ");
  return sample(grid, [&](const Point& x) { return p.evaluate(x); });
}

SampledSymbol SampledSymbol::zeros(const UniformGrid& grid) {
  return SampledSymbol{grid, std::vector<Complex>(grid.size(), Complex(0.0))};
}

namespace {

// Fourth-order first-derivative weights (times 12*dx). Rows for offset 0 and 1
// from the left face; mirrored with a sign flip on the right face.
constexpr double kEdge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
constexpr double kEdge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};
constexpr double kCentral[5] = {1.0, -8.0, 0.0, 8.0, -1.0};

}  // namespace

SampledSymbol SampledSymbol::derivative(int axis, int order) const {
  if (axis < 0 || axis >= grid.dim()) throw DimensionError("derivative axis out of range");
  SampledSymbol cur = *this;
  const int m = grid.per_axis();
  const std::size_t st = grid.stride(axis);
  const double scale = 1.0 / (12.0 * grid.spacing(axis));
  for (int o = 0; o < order; ++o) {
    SampledSymbol next = zeros(grid);
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const int i = static_cast<int>((f / st) % m);
      const std::size_t base = f - static_cast<std::size_t>(i) * st;
      auto v = [&](int k) { return cur.values[base + static_cast<std::size_t>(k) * st]; };
      Complex acc = 0.0;
      if (i >= 2 && i <= m - 3) {
        for (int k = 0; k < 5; ++k) acc += kCentral[k] * v(i - 2 + k);
      } else if (i == 0) {
        for (int k = 0; k < 5; ++k) acc += kEdge0[k] * v(k);
      } else if (i == 1) {
        for (int k = 0; k < 5; ++k) acc += kEdge1[k] * v(k);
      } else if (i == m - 1) {
        for (int k = 0; k < 5; ++k) acc -= kEdge0[k] * v(m - 1 - k);
      } else {
        for (int k = 0; k < 5; ++k) acc -= kEdge1[k] * v(m - 1 - k);
      }
      next.values[f] = acc * scale;
    }
    cur = std::move(next);
  }
  return cur;
}

SampledSymbol SampledSymbol::derivative(const Exponent& alpha) const {
  SampledSymbol cur = *this;
  for (int k = 0; k < grid.dim(); ++k)
    if (alpha[k] > 0) cur = cur.derivative(k, alpha[k]);
  return cur;
}

double SampledSymbol::max_abs(const std::vector<std::size_t>& nodes) const {
  double m = 0.0;
  if (nodes.empty()) {
    for (const auto& v : values) m = std::max(m, std::abs(v));
  } else {
    for (auto i : nodes) m = std::max(m, std::abs(values[i]));
  }
  return m;
}

SampledSymbol& SampledSymbol::operator+=(const SampledSymbol& o) {
  if (!(grid == o.grid)) throw DimensionError("sampled symbols on different grids");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

SampledSymbol& SampledSymbol::operator-=(const SampledSymbol& o) {
  if (!(grid == o.grid)) throw DimensionError("sampled symbols on different grids");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

SampledSymbol& SampledSymbol::operator*=(Complex c) {
  for (auto& v : values) v *= c;
  return *this;
}

SampledSymbol operator*(const SampledSymbol& a, const SampledSymbol& b) {
  if (!(a.grid == b.grid)) throw DimensionError("sampled symbols on different grids");
  SampledSymbol out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= b.values[i];
  return out;
}

SampledSymbol apply_cutoff(const PolySymbol& a, const Cutoff& chi, const UniformGrid& grid) {
  if (grid.size() == 0) throw ResolutionError("empty sampling grid");
  if (chi.center().size() != a.nvars()) throw DimensionError("cutoff lives in a different phase space");
  return SampledSymbol::sample(grid, [&](const Point& p) { return chi(p) * a.evaluate(p); });
}

SampledExpansion SampledExpansion::from_poly(const HExpansion& a, const UniformGrid& grid) {
  if (a.order() != 0) throw DomainError("sampled expansions are order 0");
  SampledExpansion out{a.space(), a.trunc(), {}};
  for (int j = 0; j <= a.trunc(); ++j) out.coeffs.push_back(SampledSymbol::from_poly(grid, a.coeff(j)));
  return out;
}

SampledExpansion SampledExpansion::from_function(PhaseSpace space, const UniformGrid& grid,
                                                 const std::function<Complex(const Point&)>& a0, int trunc) {
  if (grid.dim() != space.dim()) throw DimensionError("grid and phase space differ");
  SampledExpansion out{space, trunc, {}};
  out.coeffs.push_back(SampledSymbol::sample(grid, a0));
  for (int j = 1; j <= trunc; ++j) out.coeffs.push_back(SampledSymbol::zeros(grid));
  return out;
}

const SampledSymbol& SampledExpansion::coeff(int j) const {
  if (j > trunc) throw TruncationError("sampled coefficient beyond truncation");
  if (j < 0) throw DomainError("sampled expansions start at h^0");
  return coeffs[static_cast<std::size_t>(j)];
}

double SampledExpansion::max_abs(int from, int to, const std::vector<std::size_t>& nodes) const {
  double m = 0.0;
  for (int j = std::max(0, from); j <= std::min(to, trunc); ++j) m = std::max(m, coeff(j).max_abs(nodes));
  return m;
}

SampledExpansion operator-(const SampledExpansion& a, const SampledExpansion& b) {
  SampledExpansion out{a.space, std::min(a.trunc, b.trunc), {}};
  for (int j = 0; j <= out.trunc; ++j) out.coeffs.push_back(a.coeff(j) - b.coeff(j));
  return out;
}

}  // namespace psido
