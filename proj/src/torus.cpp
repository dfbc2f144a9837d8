#include "psido/torus.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace psido {

namespace {
constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);
int mod(long a, int N) { return static_cast<int>(((a % N) + N) % N); }
}  // namespace

TorusGrid::TorusGrid(int n) : N(n) {
  if (n < 2) throw DomainError("torus grid needs N >= 2");
}

double TorusGrid::h() const { return 1.0 / (2.0 * kPi * N); }

TrigSymbol TrigSymbol::constant(Complex c) { return exponential(0, 0, c); }

TrigSymbol TrigSymbol::exponential(int m, int n, Complex c) {
  TrigSymbol t;
  t.add(m, n, c);
  return t;
}

TrigSymbol TrigSymbol::cosine(int m, int n, double amp) {
  TrigSymbol t;
  t.add(m, n, amp / 2);
  t.add(-m, -n, amp / 2);
  return t;
}

TrigSymbol TrigSymbol::sine(int m, int n, double amp) {
  TrigSymbol t;
  t.add(m, n, -kI * amp / 2.0);
  t.add(-m, -n, kI * amp / 2.0);
  return t;
}

void TrigSymbol::add(int m, int n, Complex c) {
  if (c == Complex(0.0)) return;
  auto [it, fresh] = terms_.try_emplace({m, n}, c);
  if (!fresh) {
    it->second += c;
    if (it->second == Complex(0.0)) terms_.erase(it);
  }
}

Complex TrigSymbol::coefficient(int m, int n) const {
  auto it = terms_.find({m, n});
  return it == terms_.end() ? Complex(0.0) : it->second;
}

bool TrigSymbol::is_real(double tol) const {
  for (const auto& [k, c] : terms_)
    if (std::abs(coefficient(-k.first, -k.second) - std::conj(c)) > tol) return false;
  return true;
}

double TrigSymbol::l1_norm() const {
  double s = 0.0;
  for (const auto& [k, c] : terms_) s += std::abs(c);
  return s;
}

int TrigSymbol::bandwidth() const {
  int b = 0;
  for (const auto& [k, c] : terms_) b = std::max({b, std::abs(k.first), std::abs(k.second)});
  return b;
}

Complex TrigSymbol::evaluate(double x, double xi) const {
  Complex s = 0.0;
  for (const auto& [k, c] : terms_) s += c * std::exp(2.0 * kPi * kI * (k.first * x + k.second * xi));
  return s;
}

TrigSymbol TrigSymbol::pruned(double tol) const {
  TrigSymbol t;
  for (const auto& [k, c] : terms_)
    if (std::abs(c) > tol) t.terms_.emplace(k, c);
  return t;
}

TrigSymbol TrigSymbol::conj() const {
  TrigSymbol t;
  for (const auto& [k, c] : terms_) t.add(-k.first, -k.second, std::conj(c));
  return t;
}

TrigSymbol TrigSymbol::compose_linear(const Eigen::Matrix2i& L) const {
  if (L.determinant() != 1) throw NotSymplecticError("torus map must have determinant 1");
  TrigSymbol t;
  for (const auto& [k, c] : terms_) {
    const Eigen::Vector2i kk = L.transpose() * Eigen::Vector2i(k.first, k.second);
    t.add(kk[0], kk[1], c);
  }
  return t;
}

TrigSymbol& TrigSymbol::operator+=(const TrigSymbol& o) {
  for (const auto& [k, c] : o.terms_) add(k.first, k.second, c);
  return *this;
}

TrigSymbol& TrigSymbol::operator-=(const TrigSymbol& o) {
  for (const auto& [k, c] : o.terms_) add(k.first, k.second, -c);
  return *this;
}

TrigSymbol& TrigSymbol::operator*=(Complex c) {
  if (c == Complex(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, v] : terms_) v *= c;
  return *this;
}

TrigSymbol operator*(const TrigSymbol& a, const TrigSymbol& b) {
  TrigSymbol t;
  for (const auto& [k, c] : a.terms())
    for (const auto& [l, d] : b.terms()) t.add(k.first + l.first, k.second + l.second, c * d);
  return t;
}

TrigSymbol trig_from_function(const std::function<Complex(double, double)>& f, int band, int samples) {
  if (samples < 2 * band + 1) throw ResolutionError("too few samples for the requested band");
  const int M = samples;
  std::vector<Complex> roots(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) roots[static_cast<std::size_t>(j)] = std::exp(-2.0 * kPi * kI * double(j) / double(M));
  auto w = [&](long e) { return roots[static_cast<std::size_t>(((e % M) + M) % M)]; };
  std::vector<Complex> vals(static_cast<std::size_t>(M) * M);
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < M; ++k) vals[static_cast<std::size_t>(j) * M + k] = f(double(j) / M, double(k) / M);
  // Separable DFT: first along x (index j), then along xi (index k).
  const int width = 2 * band + 1;
  std::vector<Complex> partial(static_cast<std::size_t>(width) * M, Complex(0.0));
  for (int m = -band; m <= band; ++m)
    for (int j = 0; j < M; ++j) {
      const Complex wj = w(long(m) * j);
      Complex* row = &partial[static_cast<std::size_t>(m + band) * M];
      const Complex* src = &vals[static_cast<std::size_t>(j) * M];
      for (int k = 0; k < M; ++k) row[k] += src[k] * wj;
    }
  TrigSymbol t;
  for (int m = -band; m <= band; ++m)
    for (int n = -band; n <= band; ++n) {
      Complex s = 0.0;
      const Complex* row = &partial[static_cast<std::size_t>(m + band) * M];
      for (int k = 0; k < M; ++k) s += row[k] * w(long(n) * k);
      t.add(m, n, s / double(M) / double(M));
    }
  return t;
}

WeylOperator quantize_function(const std::function<Complex(double, double)>& f, const TorusGrid& grid) {
  // Op(e_{m,n})_{j, j+n} = e^{2 pi i m (j + n/2) / N}, so a function symbol
  // contributes its n-th xi-Fourier coefficient at the midpoint x = (j + n/2)/N.
  const int N = grid.N;
  const int band = (N - 1) / 2;
  WeylOperator op{grid, CMatrix::Zero(N, N)};
  Eigen::FFT<double> fft;
  std::vector<Complex> row(static_cast<std::size_t>(N)), spec;
  for (int half = 0; half < 2 * N; ++half) {
    const double x = double(half) / (2.0 * N);
    for (int k = 0; k < N; ++k) row[static_cast<std::size_t>(k)] = f(x, double(k) / N);
    fft.fwd(spec, row);
    // half = 2j + n (mod 2N): pairs (j, n) with matching parity of n.
    for (int n = -band; n <= band; ++n) {
      if (((half - n) % 2 + 2) % 2 != 0) continue;
      const int j = mod((half - n) / 2, N);
      op.matrix(j, mod(j + n, N)) = spec[static_cast<std::size_t>(mod(n, N))] / double(N);
    }
  }
  return op;
}

namespace {

Complex truncated_exp(Complex z, int K) {
  Complex s = 0.0, term = 1.0;
  for (int k = 0; k <= K; ++k) {
    s += term;
    term *= z / double(k + 1);
  }
  return s;
}

template <class PhaseFn>
TrigSymbol trig_star_impl(const TrigSymbol& a, const TrigSymbol& b, PhaseFn phase) {
  TrigSymbol t;
  for (const auto& [k, c] : a.terms())
    for (const auto& [l, d] : b.terms()) {
      const int sigma = k.first * l.second - k.second * l.first;
      t.add(k.first + l.first, k.second + l.second, c * d * phase(sigma));
    }
  return t;
}

}  // namespace

TrigSymbol trig_star(const TrigSymbol& a, const TrigSymbol& b, double h, int K) {
  if (K < 0) throw TruncationError("star truncation must be >= 0");
  return trig_star_impl(a, b, [&](int sigma) { return truncated_exp(-2.0 * kPi * kPi * kI * h * double(sigma), K); });
}

TrigSymbol trig_star_exact(const TrigSymbol& a, const TrigSymbol& b, double h) {
  return trig_star_impl(a, b, [&](int sigma) { return std::exp(-2.0 * kPi * kPi * kI * h * double(sigma)); });
}

bool WeylOperator::is_hermitian(double tol) const {
  return (matrix - matrix.adjoint()).norm() <= tol * std::max(1.0, matrix.norm());
}

bool WeylOperator::is_unitary(double tol) const {
  return (matrix.adjoint() * matrix - CMatrix::Identity(N(), N())).norm() <= tol * std::sqrt(double(N()));
}

CMatrix clock_matrix(int N) {
  CMatrix C = CMatrix::Zero(N, N);
  for (int j = 0; j < N; ++j) C(j, j) = std::exp(2.0 * kPi * kI * double(j) / double(N));
  return C;
}

CMatrix shift_matrix(int N) {
  CMatrix S = CMatrix::Zero(N, N);
  for (int j = 0; j < N; ++j) S((j + 1) % N, j) = 1.0;
  return S;
}


WeylOperator weyl_quantize(const TrigSymbol& a, const TorusGrid& grid) {
  const int N = grid.N;
  WeylOperator op{grid, CMatrix::Zero(N, N)};
  // Roots of unity e^{i pi k / N}, k mod 2N.
  std::vector<Complex> half(static_cast<std::size_t>(2 * N));
  for (int k = 0; k < 2 * N; ++k) half[static_cast<std::size_t>(k)] = std::exp(kI * kPi * double(k) / double(N));
  auto root = [&](long k) { return half[static_cast<std::size_t>(((k % (2L * N)) + 2L * N) % (2L * N))]; };
  for (const auto& [k, c] : a.terms()) {
    const long m = k.first, n = k.second;
    // (S^{-n} C^m u)_j = e^{2 pi i m (j + n) / N} u_{j+n}.
    const Complex pref = c * root(-m * n);
    for (int j = 0; j < N; ++j) op.matrix(j, mod(j + n, N)) += pref * root(2 * m * (j + n));
  }
  return op;
}

TrigSymbol weyl_symbol(const WeylOperator& M, double tol) {
  const int N = M.N();
  std::vector<Complex> half(static_cast<std::size_t>(2 * N));
  for (int k = 0; k < 2 * N; ++k) half[static_cast<std::size_t>(k)] = std::exp(kI * kPi * double(k) / double(N));
  auto root = [&](long k) { return half[static_cast<std::size_t>(((k % (2L * N)) + 2L * N) % (2L * N))]; };
  Eigen::FFT<double> fft;
  std::vector<Complex> diag(static_cast<std::size_t>(N)), spec;
  TrigSymbol t;
  const int lo = -((N - 1) / 2);
  for (int n = lo; n < lo + N; ++n) {
    // Entry (j, j+n) of Op(e_{m,n}) is root(2 m j + m n): a DFT along each diagonal.
    for (int j = 0; j < N; ++j) diag[static_cast<std::size_t>(j)] = M.matrix(j, mod(j + n, N));
    fft.fwd(spec, diag);
    for (int m = lo; m < lo + N; ++m) {
      const Complex s = root(-long(m) * n) * spec[static_cast<std::size_t>(mod(m, N))] / double(N);
      if (std::abs(s) > tol) t.add(m, n, s);
    }
  }
  return t;
}

double spectral_norm(const CMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<CMatrix> svd(M);
  return svd.singularValues()(0);
}

double compose_vs_star(const TrigSymbol& a, const TrigSymbol& b, const TorusGrid& grid, int K) {
  const CMatrix lhs = weyl_quantize(a, grid).matrix * weyl_quantize(b, grid).matrix;
  return spectral_norm(lhs - weyl_quantize(trig_star(a, b, grid.h(), K), grid).matrix);
}

double microlocal_residual(const WeylOperator& T, const WeylOperator& A, const WeylOperator& B) {
  if (!(T.grid == A.grid) || !(T.grid == B.grid)) throw DimensionError("operators live on different torus grids");
  return spectral_norm(A.matrix * T.matrix * B.matrix);
}

SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& residual) {
  if (h.size() != residual.size() || h.size() < 2) throw InconclusiveError("slope fit needs at least two points");
  const std::size_t n = h.size();
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(residual[i] > 0.0) || !(h[i] > 0.0)) throw InconclusiveError("residual at machine zero; slope undefined");
    A(i, 0) = std::log(h[i]);
    A(i, 1) = 1.0;
    y[i] = std::log(residual[i]);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  const double ss_res = (y - A * coef).squaredNorm();
  return {coef[0], coef[1], ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

nlohmann::json to_json(const WeylOperator& M) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int r = 0; r < M.N(); ++r) {
    std::vector<double> rr, ii;
    for (int c = 0; c < M.N(); ++c) {
      rr.push_back(M.matrix(r, c).real());
      ii.push_back(M.matrix(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"N", M.N()}, {"re", re}, {"im", im}};
}

WeylOperator operator_from_json(const nlohmann::json& j) {
  const int N = j.at("N").get<int>();
  WeylOperator M{TorusGrid(N), CMatrix(N, N)};
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) M.matrix(r, c) = Complex(j.at("re").at(r).at(c).get<double>(), j.at("im").at(r).at(c).get<double>());
  return M;
}

nlohmann::json to_json(const TrigSymbol& a) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [k, c] : a.terms()) out.push_back({{"freq", {k.first, k.second}}, {"re", c.real()}, {"im", c.imag()}});
  return out;
}

TrigSymbol trig_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("trig symbol must be a JSON array of {freq, re, im}");
  TrigSymbol t;
  for (const auto& term : j) {
    const auto f = term.at("freq").get<std::vector<int>>();
    if (f.size() != 2) throw DimensionError("trig frequency must have two entries");
    t.add(f[0], f[1], Complex(term.value("re", 0.0), term.value("im", 0.0)));
  }
  return t;
}

std::string scan_csv(const std::vector<ScanRow>& rows, double fitted_slope) {
  const bool with_kind = std::any_of(rows.begin(), rows.end(), [](const ScanRow& r) { return !r.kind.empty(); });
  std::ostringstream os;
  os.precision(17);
  os << "N,h,residual,fitted_slope" << (with_kind ? ",kind" : "") << "\n";
  for (const auto& r : rows) {
    os << r.N << "," << r.h << "," << r.residual << "," << fitted_slope;
    if (with_kind) os << "," << r.kind;
    os << "\n";
  }
  return os.str();
}

}  // namespace psido
