#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "psido/poly_symbol.hpp"
#include "psido/sampled.hpp"
#include "psido/torus.hpp"

namespace psido {

using Matrix = Eigen::MatrixXd;

/// Real-valued Hamiltonian term: a polynomial on R^{2n} or a trigonometric
/// polynomial on the unit torus (n = 1). Only the real part is used.
using HamiltonianSymbol = std::variant<PolySymbol, TrigSymbol>;

int symbol_dim(const HamiltonianSymbol& q);
double symbol_value(const HamiltonianSymbol& q, const Point& rho);
Point symbol_gradient(const HamiltonianSymbol& q, const Point& rho);
Matrix symbol_hessian(const HamiltonianSymbol& q, const Point& rho);

/// Polynomial time profile f(t) = sum_k c_k t^k.
struct TimeProfile {
  std::vector<double> coeffs{1.0};

  static TimeProfile constant(double c) { return TimeProfile{{c}}; }
  /// Derivative of the reparametrization s(t) = t + alpha t (1 - t).
  static TimeProfile reparametrized(double alpha) { return TimeProfile{{1.0 + alpha, -2.0 * alpha}}; }
  double operator()(double t) const;
  /// Integral over [a, b].
  double integral(double a, double b) const;
};

/// q_t = sum_k f_k(t) q_k on [t0, t1].
struct HamiltonianPath {
  struct Term {
    HamiltonianSymbol symbol;
    TimeProfile profile;
  };
  std::vector<Term> terms;
  double t0 = 0.0;
  double t1 = 1.0;

  static HamiltonianPath autonomous(HamiltonianSymbol q, double t1 = 1.0);
  int dim() const;
  Point field(double t, const Point& rho) const;
  Matrix field_jacobian(double t, const Point& rho) const;
  /// Same path run backwards: flow(reversed()) = flow()^{-1}.
  HamiltonianPath reversed() const;
};

enum class MapKind { Linear, Polynomial, Flow, Function };

/// Symplectic map with Jacobian. Linear maps may carry a translation;
/// polynomial maps are given by their component polynomials; flow maps
/// integrate a HamiltonianPath with the implicit midpoint rule.
class SymplecticMap {
 public:
  using Evaluator = std::function<std::pair<Point, Matrix>(const Point&)>;

  static SymplecticMap identity(int dim);
  static SymplecticMap linear(Matrix M, Point offset = Point());
  static SymplecticMap polynomial(std::vector<PolySymbol> components);
  static SymplecticMap flow(HamiltonianPath path, int steps = 4096);
  static SymplecticMap function(int dim, Evaluator f, std::string label = "function");
  /// Torus map rho -> L^T rho mod 1 (the classical map of the cat quantization).
  static SymplecticMap torus_linear(const Eigen::Matrix2i& L);

  MapKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  const Matrix& matrix() const { return M_; }
  const Point& offset() const { return offset_; }
  const std::vector<PolySymbol>& components() const { return components_; }
  const std::optional<HamiltonianPath>& path() const { return path_; }
  int steps() const { return steps_; }

  /// Restrict the domain; evaluating outside it raises DomainError.
  SymplecticMap with_domain(Region r) const;
  const std::optional<Region>& domain() const { return domain_; }

  Point operator()(const Point& rho) const { return apply(rho).first; }
  std::pair<Point, Matrix> apply(const Point& rho) const;
  Matrix jacobian(const Point& rho) const { return apply(rho).second; }
  /// Inverse where available (linear and flow maps).
  SymplecticMap inverse() const;
  /// this o other.
  SymplecticMap compose(const SymplecticMap& other) const;

 private:
  SymplecticMap() = default;
  MapKind kind_ = MapKind::Linear;
  int dim_ = 2;
  std::string label_;
  Matrix M_;
  Point offset_;
  std::vector<PolySymbol> components_;
  std::optional<HamiltonianPath> path_;
  int steps_ = 0;
  Evaluator eval_;
  std::optional<Region> domain_;
  bool periodic_ = false;
};

/// Time-t1 flow of the path from one initial point, with the Jacobian from
/// the discrete variational equation (a Cayley step, so exactly symplectic
/// up to rounding and Newton tolerance).
std::pair<Point, Matrix> integrate_flow(const HamiltonianPath& path, const Point& rho0, int steps);

/// max over samples of ||J^T Omega J - Omega|| (spectral norm).
double check_symplectic(const SymplecticMap& kappa, const std::vector<Point>& samples);
double symplectic_defect(const Matrix& J);

/// Exact pullbacks: polynomial a through linear/polynomial maps and trig a
/// through integer torus maps.
PolySymbol pullback(const PolySymbol& a, const SymplecticMap& kappa);
TrigSymbol pullback(const TrigSymbol& a, const Eigen::Matrix2i& L);
/// Sampled pullback (a o kappa) on a grid.
SampledSymbol pullback(const std::function<Complex(const Point&)>& a, const SymplecticMap& kappa,
                       const UniformGrid& grid);
std::function<Complex(const Point&)> pullback_fn(std::function<Complex(const Point&)> a, SymplecticMap kappa);

/// Hamiltonian path with flow(path) = M for a symplectic M having a real
/// logarithm: q = -(1/2) rho^T Omega log(M) rho.
HamiltonianPath path_from_linear(const Matrix& M);

nlohmann::json map_dump(const SymplecticMap& kappa, const std::vector<Point>& samples);

}  // namespace psido
