#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "psido/errors.hpp"

namespace psido {

using Point = Eigen::VectorXd;

/// T*R^n in coordinates (x_1..x_n, xi_1..xi_n). Coordinates are stored in
/// that order everywhere; the canonical form is Omega = [[0, I], [-I, 0]].
struct PhaseSpace {
  int n = 1;

  PhaseSpace() = default;
  explicit PhaseSpace(int half_dim);

  int dim() const { return 2 * n; }
  int x_index(int j) const { return j; }
  int xi_index(int j) const { return n + j; }
  std::string coordinate_name(int k) const;

  friend bool operator==(const PhaseSpace&, const PhaseSpace&) = default;
};

/// Canonical symplectic matrix for the (x, xi) ordering.
Eigen::MatrixXd canonical_form(int n);

enum class RegionKind { Ball, Box, FullTorus };

/// Working set in phase space. Every kind offered here is convex (or the
/// fundamental domain of the torus chart), and the flag is kept so callers
/// cannot silently hand in a region that needs a cohomology argument.
class Region {
 public:
  static Region ball(Point center, double radius, bool simply_connected = true);
  static Region box(Point lo, Point hi, bool simply_connected = true);
  /// [0,1)^2 with periodic identification.
  static Region full_torus(bool simply_connected = true);

  RegionKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(lo_.size()); }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  const Point& lower() const { return lo_; }
  const Point& upper() const { return hi_; }
  bool simply_connected() const { return true; }

  bool contains(const Point& p, double slack = 0.0) const;

  /// Uniform grid over the bounding box, restricted to points inside the region.
  std::vector<Point> sample_grid(int per_axis) const;

 private:
  Region() = default;
  RegionKind kind_ = RegionKind::Ball;
  Point center_;
  double radius_ = 0.0;
  Point lo_, hi_;
};

/// Profile t -> [0,1] with value 1 for t <= 0 and 0 for t >= 1.
enum class BumpProfile { C2Polynomial, SmoothExp };

BumpProfile parse_profile(const std::string& name);
std::string profile_name(BumpProfile p);

/// Radial plateau function: 1 within `inner` of the center, 0 beyond `outer`.
/// With `periodic` the distance is measured on the unit torus.
class Cutoff {
 public:
  Cutoff(Point center, double inner, double outer,
         BumpProfile profile = BumpProfile::C2Polynomial,
         double smoothness = 1.0, bool periodic = false);

  double operator()(const Point& p) const;
  /// Gradient with respect to the phase-space point.
  Point gradient(const Point& p) const;

  const Point& center() const { return center_; }
  double inner() const { return inner_; }
  double outer() const { return outer_; }
  bool periodic() const { return periodic_; }
  BumpProfile profile() const { return profile_; }
  Region inner_region() const { return Region::ball(center_, inner_); }
  Region support_region() const { return Region::ball(center_, outer_); }

 private:
  Point displacement(const Point& p) const;
  double profile_value(double t) const;
  double profile_derivative(double t) const;

  Point center_;
  double inner_;
  double outer_;
  BumpProfile profile_;
  double smoothness_;
  bool periodic_;
};

}  // namespace psido
