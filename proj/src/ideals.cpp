#include "psido/ideals.hpp"

#include <algorithm>
#include <cmath>

namespace psido {

std::string tag_name(IdealTag t) {
  switch (t) {
    case IdealTag::Point:
      return "point";
    case IdealTag::BoundaryOrUnit:
      return "boundary_or_unit";
    case IdealTag::Unit:
      return "unit";
  }
  return "unknown";
}

namespace {

struct Residuals {
  const std::vector<PolySymbol>& gens;
  std::vector<std::vector<PolySymbol>> grads;

  explicit Residuals(const std::vector<PolySymbol>& g) : gens(g) {
    for (const auto& p : g) {
      std::vector<PolySymbol> d;
      for (int v = 0; v < p.space().dim(); ++v) d.push_back(p.derivative(v));
      grads.push_back(std::move(d));
    }
  }

  double sum_sq(const Point& r) const {
    double s = 0.0;
    for (const auto& p : gens) s += std::norm(p.evaluate(r));
    return s;
  }

  double max_abs(const Point& r) const {
    double m = 0.0;
    for (const auto& p : gens) m = std::max(m, std::abs(p.evaluate(r)));
    return m;
  }

  Point grad_sum_sq(const Point& r) const {
    Point g = Point::Zero(r.size());
    for (std::size_t j = 0; j < gens.size(); ++j) {
      const Complex v = gens[j].evaluate(r);
      for (int k = 0; k < r.size(); ++k) g[k] += 2.0 * (std::conj(v) * grads[j][k].evaluate(r)).real();
    }
    return g;
  }

  // Gauss-Newton on the real system (Re p_j, Im p_j) = 0.
  Point refine(Point r) const {
    const int d = static_cast<int>(r.size());
    const int m = static_cast<int>(gens.size());
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd F(2 * m);
      Eigen::MatrixXd J(2 * m, d);
      for (int j = 0; j < m; ++j) {
        const Complex v = gens[j].evaluate(r);
        F[2 * j] = v.real();
        F[2 * j + 1] = v.imag();
        for (int k = 0; k < d; ++k) {
          const Complex dv = grads[j][k].evaluate(r);
          J(2 * j, k) = dv.real();
          J(2 * j + 1, k) = dv.imag();
        }
      }
      const Point step = J.completeOrthogonalDecomposition().solve(F);
      r -= step;
      if (step.norm() < 1e-15 * (1.0 + r.norm())) break;
    }
    return r;
  }
};

}  // namespace

IdealClass classify_ideal(const IdealSpec& spec, const ClassifyOptions& opts) {
  if (spec.generators.empty()) throw DomainError("ideal needs at least one generator");
  const PhaseSpace ps = spec.generators.front().space();
  for (const auto& p : spec.generators)
    if (!(p.space() == ps) || p.extra_vars() != 0) throw DimensionError("generators live on different phase spaces");
  if (spec.region.dim() != ps.dim()) throw DimensionError("region and generators differ in dimension");

  IdealClass out;
  out.tol = opts.tol;
  out.delta = opts.delta;
  for (const auto& p : spec.generators) {
    if (p.is_constant() && std::abs(p.constant_term()) > 0.0) {
      out.tag = IdealTag::Unit;
      out.witness = spec.region.center();
      out.residual = std::abs(p.constant_term());
      out.lower_bound = out.sample_min = std::norm(p.constant_term());
      return out;
    }
  }

  const Residuals R(spec.generators);
  const auto samples = spec.region.sample_grid(opts.resolution);
  if (samples.empty()) throw ResolutionError("sampling grid missed the region");
  out.samples_checked = static_cast<int>(samples.size());
  std::vector<std::pair<double, std::size_t>> vals;
  double lip = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    vals.emplace_back(R.sum_sq(samples[i]), i);
    lip = std::max(lip, R.grad_sum_sq(samples[i]).norm());
  }
  std::sort(vals.begin(), vals.end());

  if (opts.refine) {
    const std::size_t tries = std::min<std::size_t>(8, vals.size());
    for (std::size_t t = 0; t < tries; ++t) {
      const Point r = R.refine(samples[vals[t].second]);
      if (!r.allFinite() || !spec.region.contains(r, 1e-12)) continue;
      const double res = R.max_abs(r);
      if (res <= opts.tol) {
        out.tag = IdealTag::Point;
        out.witness = r;
        out.residual = res;
        return out;
      }
    }
  } else if (std::sqrt(vals.front().first) <= opts.tol) {
    out.tag = IdealTag::Point;
    out.witness = samples[vals.front().second];
    out.residual = R.max_abs(out.witness);
    return out;
  }

  // No zero found: certify positivity between samples with a Lipschitz bound.
  const Point extent = spec.region.upper() - spec.region.lower();
  const double half_diag = 0.5 * extent.norm() / (opts.resolution - 1);
  const double min_s = vals.front().first;
  out.witness = samples[vals.front().second];
  out.residual = R.max_abs(out.witness);
  out.sample_min = min_s;
  out.lower_bound = min_s - 2.0 * lip * half_diag;
  if (out.lower_bound >= opts.delta) {
    out.tag = IdealTag::BoundaryOrUnit;
    return out;
  }
  const double needed = 2.0 * lip * 0.5 * extent.norm() / std::max(min_s - opts.delta, 1e-300);
  throw InconclusiveError("sampled sum of squares bottoms out at " + std::to_string(min_s) +
                          "; neither a zero nor a positive bound is certified (try resolution >= " +
                          std::to_string(static_cast<long long>(std::ceil(needed)) + 1) + ")");
}

nlohmann::json to_json(const IdealClass& c) {
  return {{"tag", tag_name(c.tag)},
          {"witness", std::vector<double>(c.witness.data(), c.witness.data() + c.witness.size())},
          {"residual", c.residual},
          {"sample_min", c.sample_min},
          {"lower_bound", c.lower_bound},
          {"tolerances", {{"tol", c.tol}, {"delta", c.delta}}},
          {"samples_checked", c.samples_checked}};
}

}  // namespace psido
