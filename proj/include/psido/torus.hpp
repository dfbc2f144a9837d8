#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psido/errors.hpp"
#include "psido/phase_space.hpp"

namespace psido {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// Discrete torus with N sites; h = 1/(2 pi N).
struct TorusGrid {
  int N = 2;

  explicit TorusGrid(int n);
  double h() const;

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;
};

using Frequency = std::pair<int, int>;

/// Trigonometric polynomial sum c_{m,n} e^{2 pi i (m x + n xi)} on [0,1)^2.
class TrigSymbol {
 public:
  TrigSymbol() = default;
  static TrigSymbol constant(Complex c);
  static TrigSymbol exponential(int m, int n, Complex c = 1.0);
  static TrigSymbol cos_x(double amp = 1.0) { return cosine(1, 0, amp); }
  static TrigSymbol cos_xi(double amp = 1.0) { return cosine(0, 1, amp); }
  /// amp * cos(2 pi (m x + n xi)).
  static TrigSymbol cosine(int m, int n, double amp = 1.0);
  static TrigSymbol sine(int m, int n, double amp = 1.0);

  const std::map<Frequency, Complex>& terms() const { return terms_; }
  void add(int m, int n, Complex c);
  Complex coefficient(int m, int n) const;
  bool is_zero() const { return terms_.empty(); }
  /// Hermitian-symmetric coefficients within tol.
  bool is_real(double tol = 1e-14) const;
  double l1_norm() const;
  int bandwidth() const;

  Complex evaluate(double x, double xi) const;
  Complex evaluate(const Point& p) const { return evaluate(p[0], p[1]); }
  TrigSymbol pruned(double tol) const;
  TrigSymbol conj() const;
  /// a(L rho) for integer matrix L with det 1: frequency k maps to L^T k.
  TrigSymbol compose_linear(const Eigen::Matrix2i& L) const;

  TrigSymbol& operator+=(const TrigSymbol& o);
  TrigSymbol& operator-=(const TrigSymbol& o);
  TrigSymbol& operator*=(Complex c);
  friend TrigSymbol operator+(TrigSymbol a, const TrigSymbol& b) { return a += b; }
  friend TrigSymbol operator-(TrigSymbol a, const TrigSymbol& b) { return a -= b; }
  friend TrigSymbol operator*(TrigSymbol a, Complex c) { return a *= c; }
  friend TrigSymbol operator*(Complex c, TrigSymbol a) { return a *= c; }
  /// Pointwise product.
  friend TrigSymbol operator*(const TrigSymbol& a, const TrigSymbol& b);

 private:
  std::map<Frequency, Complex> terms_;
};

/// Fourier coefficients with |m|, |n| <= band of a function on the unit
/// torus, from `samples` x `samples` equispaced values.
TrigSymbol trig_from_function(const std::function<Complex(double, double)>& f, int band, int samples);

/// Truncated Weyl star product a #_K b at numeric h. For exponentials
/// e_k # e_l = exp(-2 pi^2 i h sigma(k, l)) e_{k+l} with sigma = m n' - n m';
/// the exponential is expanded through h^K.
TrigSymbol trig_star(const TrigSymbol& a, const TrigSymbol& b, double h, int K);
/// Exact star product (all orders).
TrigSymbol trig_star_exact(const TrigSymbol& a, const TrigSymbol& b, double h);

struct WeylOperator {
  TorusGrid grid;
  CMatrix matrix;

  int N() const { return grid.N; }
  bool is_hermitian(double tol = 1e-12) const;
  bool is_unitary(double tol = 1e-10) const;
};

/// Clock C = diag(e^{2 pi i j / N}) and shift S e_j = e_{j+1 mod N}.
CMatrix clock_matrix(int N);
CMatrix shift_matrix(int N);

/// Op(e_{m,n}) = e^{-i pi m n / N} S^{-n} C^m, i.e. e^{i(2 pi m X + 2 pi n Xi)}
/// with X multiplication by x_j = j/N and Xi = (h/i) d/dx generating
/// translations by n/N.
WeylOperator weyl_quantize(const TrigSymbol& a, const TorusGrid& grid);

/// Symbol with centered frequencies (-N/2, N/2] whose quantization is M.
TrigSymbol weyl_symbol(const WeylOperator& M, double tol = 0.0);

/// Quantization of a sampled function through its centered discrete
/// Fourier coefficients (|m|, |n| <= (N-1)/2).
WeylOperator quantize_function(const std::function<Complex(double, double)>& f, const TorusGrid& grid);

double spectral_norm(const CMatrix& M);
double compose_vs_star(const TrigSymbol& a, const TrigSymbol& b, const TorusGrid& grid, int K);
/// ||A T B||.
double microlocal_residual(const WeylOperator& T, const WeylOperator& A, const WeylOperator& B);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares fit of log(residual) against log(h). Nonpositive residuals
/// are rejected with InconclusiveError.
SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& residual);

nlohmann::json to_json(const WeylOperator& M);
WeylOperator operator_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrigSymbol& a);
TrigSymbol trig_from_json(const nlohmann::json& j);

struct ScanRow {
  int N = 0;
  double h = 0.0;
  double residual = 0.0;
  std::string kind;
};

/// CSV with header N,h,residual,fitted_slope (plus kind when any row has one).
std::string scan_csv(const std::vector<ScanRow>& rows, double fitted_slope);

}  // namespace psido
