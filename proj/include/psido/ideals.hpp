#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "psido/poly_symbol.hpp"

namespace psido {

struct IdealSpec {
  std::vector<PolySymbol> generators;
  Region region;
};

/// `Point`: the generators share a zero in the region (the ideal of symbols
/// vanishing there). `Unit`: a generator is a nonzero constant. Otherwise
/// `BoundaryOrUnit`: no common zero, certified by a positive lower bound on
/// sum |p_j|^2 over the region; finitely many generators cannot separate the
/// boundary ideal from the whole algebra.
enum class IdealTag { Point, BoundaryOrUnit, Unit };

std::string tag_name(IdealTag t);

struct IdealClass {
  IdealTag tag = IdealTag::BoundaryOrUnit;
  Point witness;             // common zero (Point) or arg min of the sum of squares
  double residual = 0.0;     // max_j |p_j(witness)|
  double sample_min = 0.0;   // min of sum |p_j|^2 over the sample set
  double lower_bound = 0.0;  // sample_min minus a Lipschitz margin between samples
  int samples_checked = 0;
  double tol = 1e-10;
  double delta = 1e-6;
};

struct ClassifyOptions {
  int resolution = 41;  // grid nodes per axis over the region's bounding box
  bool refine = true;
  double tol = 1e-10;
  double delta = 1e-6;
};

IdealClass classify_ideal(const IdealSpec& spec, const ClassifyOptions& opts = {});

nlohmann::json to_json(const IdealClass& c);

}  // namespace psido
