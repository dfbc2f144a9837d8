#include "psido/phase_space.hpp"

#include <cmath>

namespace psido {

PhaseSpace::PhaseSpace(int half_dim) : n(half_dim) {
  if (half_dim < 1) throw DimensionError("phase space half-dimension must be >= 1");
}

std::string PhaseSpace::coordinate_name(int k) const {
  if (k < n) return "x" + std::to_string(k + 1);
  return "xi" + std::to_string(k - n + 1);
}

Eigen::MatrixXd canonical_form(int n) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  omega.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  omega.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return omega;
}

Region Region::ball(Point center, double radius, bool simply_connected) {
  if (!simply_connected) throw RegionError("working regions must be simply connected");
  if (!(radius > 0.0)) throw RegionError("ball radius must be positive");
  Region r;
  r.kind_ = RegionKind::Ball;
  r.radius_ = radius;
  r.lo_ = center.array() - radius;
  r.hi_ = center.array() + radius;
  r.center_ = std::move(center);
  return r;
}

Region Region::box(Point lo, Point hi, bool simply_connected) {
  if (!simply_connected) throw RegionError("working regions must be simply connected");
  if (lo.size() != hi.size() || lo.size() == 0) throw DimensionError("box corners differ in dimension");
  if ((hi.array() <= lo.array()).any()) throw RegionError("box must be nonempty");
  Region r;
  r.kind_ = RegionKind::Box;
  r.center_ = 0.5 * (lo + hi);
  r.radius_ = 0.5 * (hi - lo).norm();
  r.lo_ = std::move(lo);
  r.hi_ = std::move(hi);
  return r;
}

Region Region::full_torus(bool simply_connected) {
  if (!simply_connected) throw RegionError("working regions must be simply connected");
  Region r;
  r.kind_ = RegionKind::FullTorus;
  r.lo_ = Point::Zero(2);
  r.hi_ = Point::Ones(2);
  r.center_ = Point::Constant(2, 0.5);
  r.radius_ = std::sqrt(0.5);
  return r;
}

bool Region::contains(const Point& p, double slack) const {
  if (p.size() != lo_.size()) throw DimensionError("point dimension does not match region");
  switch (kind_) {
    case RegionKind::Ball:
      return (p - center_).norm() <= radius_ + slack;
    case RegionKind::Box:
      return ((p.array() >= lo_.array() - slack) && (p.array() <= hi_.array() + slack)).all();
    case RegionKind::FullTorus:
      return true;
  }
  return false;
}

std::vector<Point> Region::sample_grid(int per_axis) const {
  if (per_axis < 2) throw ResolutionError("sample grid needs at least 2 points per axis");
  const int d = dim();
  std::vector<Point> out;
  std::vector<int> idx(d, 0);
  const bool periodic = kind_ == RegionKind::FullTorus;
  for (;;) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      const double t = periodic ? static_cast<double>(idx[k]) / per_axis
                                : static_cast<double>(idx[k]) / (per_axis - 1);
      p[k] = lo_[k] + t * (hi_[k] - lo_[k]);
    }
    if (contains(p, 1e-12)) out.push_back(p);
    int k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  return out;
}

BumpProfile parse_profile(const std::string& name) {
  if (name == "c2_poly") return BumpProfile::C2Polynomial;
  if (name == "smooth_exp") return BumpProfile::SmoothExp;
  throw ConfigError("unknown bump profile '" + name + "'");
}

std::string profile_name(BumpProfile p) {
  return p == BumpProfile::C2Polynomial ? "c2_poly" : "smooth_exp";
}

Cutoff::Cutoff(Point center, double inner, double outer, BumpProfile profile,
               double smoothness, bool periodic)
    : center_(std::move(center)),
      inner_(inner),
      outer_(outer),
      profile_(profile),
      smoothness_(smoothness),
      periodic_(periodic) {
  if (!(inner >= 0.0 && outer > inner)) throw RegionError("cutoff needs 0 <= inner < outer");
  if (!(smoothness > 0.0)) throw RegionError("cutoff smoothness must be positive");
}

Point Cutoff::displacement(const Point& p) const {
  if (p.size() != center_.size()) throw DimensionError("cutoff evaluated at wrong dimension");
  Point d = p - center_;
  if (periodic_) {
    for (Eigen::Index k = 0; k < d.size(); ++k) d[k] -= std::round(d[k]);
  }
  return d;
}

namespace {

double exp_bump(double s, double k) { return s > 0.0 ? std::exp(-k / s) : 0.0; }
double exp_bump_d(double s, double k) { return s > 0.0 ? std::exp(-k / s) * k / (s * s) : 0.0; }

}  // namespace

// t in [0,1] is the normalized distance through the transition layer.
double Cutoff::profile_value(double t) const {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  if (profile_ == BumpProfile::C2Polynomial) {
    const double s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    return 1.0 - s;
  }
  const double a = exp_bump(1.0 - t, smoothness_);
  const double b = exp_bump(t, smoothness_);
  return a / (a + b);
}

double Cutoff::profile_derivative(double t) const {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  if (profile_ == BumpProfile::C2Polynomial) {
    const double u = t * (1.0 - t);
    return -30.0 * u * u;
  }
  const double a = exp_bump(1.0 - t, smoothness_);
  const double b = exp_bump(t, smoothness_);
  const double da = -exp_bump_d(1.0 - t, smoothness_);
  const double db = exp_bump_d(t, smoothness_);
  return (da * b - a * db) / ((a + b) * (a + b));
}

double Cutoff::operator()(const Point& p) const {
  const double r = displacement(p).norm();
  return profile_value((r - inner_) / (outer_ - inner_));
}

Point Cutoff::gradient(const Point& p) const {
  const Point d = displacement(p);
  const double r = d.norm();
  if (r <= inner_ || r >= outer_ || r == 0.0) return Point::Zero(d.size());
  const double dt = profile_derivative((r - inner_) / (outer_ - inner_)) / (outer_ - inner_);
  return dt * d / r;
}

}  // namespace psido
