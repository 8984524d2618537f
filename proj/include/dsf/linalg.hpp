#ifndef DSF_LINALG_HPP
#define DSF_LINALG_HPP

// Dense symmetric linear algebra on small matrices (C <= 32): covariance
// estimation, OAS shrinkage, cyclic Jacobi eigendecomposition and the
// eigen/Taylor matrix logarithms used to summarize channel statistics.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsf {

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw InputError("Matrix: data length does not match shape");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InputError("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InputError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("matrix add: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("matrix subtract: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

inline double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Covariance

/// Unbiased covariance of the rows of a C x T window after mean-centering.
inline Matrix sample_covariance(const Matrix& x) {
  const std::size_t c = x.rows(), t = x.cols();
  if (t < 2) throw DegenerateInput("sample_covariance: need at least 2 samples");
  Matrix centered = x;
  for (std::size_t i = 0; i < c; ++i) {
    auto r = centered.row(i);
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / double(t);
    for (double& v : r) v -= mean;
  }
  Matrix cov(c, c);
  const double inv = 1.0 / double(t - 1);
  for (std::size_t i = 0; i < c; ++i) {
    auto ri = centered.row(i);
    for (std::size_t j = i; j < c; ++j) {
      auto rj = centered.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < t; ++k) s += ri[k] * rj[k];
      cov(i, j) = cov(j, i) = s * inv;
    }
  }
  return cov;
}

struct OasResult {
  Matrix shrunk;
  double rho = 0.0;
  bool degenerate = false;
};

/// Oracle Approximating Shrinkage toward tr(S)/C * I.
inline OasResult oas_shrink(const Matrix& s, std::size_t n_samples) {
  if (!s.is_square()) throw InputError("oas_shrink: matrix must be square");
  if (n_samples < 2) throw InputError("oas_shrink: need n_samples >= 2");
  const std::size_t c = s.rows();
  const double p = double(c);
  const double tr = trace(s);
  if (tr == 0.0) {
    return {1e-12 * Matrix::identity(c), 1.0, true};
  }
  double tr_s2 = 0.0;  // tr(S^2) = sum of squares for symmetric S
  for (double v : s.data()) tr_s2 += v * v;

  const double num = (1.0 - 2.0 / p) * tr_s2 + tr * tr;
  const double den = (double(n_samples) + 1.0 - 2.0 / p) * (tr_s2 - tr * tr / p);
  const double rho = den <= 0.0 ? 1.0 : std::min(1.0, num / den);

  const double mu = tr / p;
  Matrix out(c, c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out(i, j) = (1.0 - rho) * s(i, j) + (i == j ? rho * mu : 0.0);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j) out(j, i) = out(i, j);
  return {std::move(out), rho, false};
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

struct SymEigDecomp {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // columns are eigenvectors
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

inline Matrix symmetrized(const Matrix& s) {
  if (!s.is_square()) throw InputError("expected a square matrix");
  if (!all_finite(s)) throw InputError("matrix has non-finite entries");
  const double scale = std::max(1.0, max_abs(s));
  Matrix a = s;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (std::abs(s(i, j) - s(j, i)) > 1e-9 * scale)
        throw InputError("matrix is not symmetric");
      a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
    }
  return a;
}

}  // namespace detail

/// Cyclic Jacobi eigensolver. Stops when the off-diagonal Frobenius mass drops
/// below 1e-12 * ||S||_F or after 100 sweeps.
inline SymEigDecomp sym_eig(const Matrix& s) {
  Matrix a = detail::symmetrized(s);
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);
  const double tol = 1e-12 * frobenius_norm(a);

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (detail::off_diagonal_norm(a) <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymEigDecomp out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

/// U diag(values) U^T
inline Matrix compose_spectral(const Matrix& u, std::span<const double> values) {
  const std::size_t n = u.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += u(i, k) * values[k] * u(j, k);
      out(i, j) = out(j, i) = s;
    }
  return out;
}

inline constexpr double kEigFloor = 1e-12;

/// Matrix logarithm of a symmetric PSD matrix. Eigenvalues at or below
/// kEigFloor contribute log = 0.
inline Matrix matrix_log_eig(const Matrix& s) {
  auto dec = sym_eig(s);
  const double scale = std::max(1.0, std::abs(dec.eigenvalues.front()));
  for (double& l : dec.eigenvalues) {
    if (l < -1e-9 * scale) throw NotPsdError("matrix_log_eig: negative eigenvalue");
    l = l <= kEigFloor ? 0.0 : std::log(l);
  }
  return compose_spectral(dec.eigenvectors, dec.eigenvalues);
}

inline Matrix matrix_exp_eig(const Matrix& s) {
  auto dec = sym_eig(s);
  for (double& l : dec.eigenvalues) l = std::exp(l);
  return compose_spectral(dec.eigenvectors, dec.eigenvalues);
}

/// Truncated series log(A) = sum_{k=1..n} (-1)^{k+1} (Â - I)^k / k + log(s) I,
/// with Â = A / s and s = ||A||_F / 2.
inline Matrix matrix_log_taylor(const Matrix& a, std::size_t n_terms) {
  if (n_terms == 0) throw InputError("matrix_log_taylor: n_terms must be >= 1");
  if (!a.is_square()) throw InputError("matrix_log_taylor: matrix must be square");
  const std::size_t n = a.rows();
  const double s = frobenius_norm(a) / 2.0;
  if (!(s > 0.0)) throw InputError("matrix_log_taylor: zero matrix");

  Matrix x = (1.0 / s) * a;  // Â - I
  for (std::size_t i = 0; i < n; ++i) x(i, i) -= 1.0;

  Matrix power = x;
  Matrix out = x;
  for (std::size_t k = 2; k <= n_terms; ++k) {
    power = matmul(power, x);
    const double coeff = (k % 2 == 0 ? -1.0 : 1.0) / double(k);
    for (std::size_t i = 0; i < out.data().size(); ++i)
      out.data()[i] += coeff * power.data()[i];
  }
  const double shift = std::log(s);
  for (std::size_t i = 0; i < n; ++i) out(i, i) += shift;
  return out;
}

/// Spectral norm of a symmetric matrix.
inline double spectral_norm_sym(const Matrix& s) {
  const auto dec = sym_eig(s);
  double m = 0.0;
  for (double l : dec.eigenvalues) m = std::max(m, std::abs(l));
  return m;
}

// ---------------------------------------------------------------------------
// Vectorization

/// Diagonal and strict upper triangle, row-major: (S11, S12, .., S1C, S22, .., SCC).
inline std::vector<double> vec_upper(const Matrix& s) {
  if (!s.is_square()) throw InputError("vec_upper: matrix must be square");
  const std::size_t c = s.rows();
  std::vector<double> out;
  out.reserve(c * (c + 1) / 2);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i; j < c; ++j) out.push_back(s(i, j));
  return out;
}

inline std::size_t vec_upper_size(std::size_t c) { return c * (c + 1) / 2; }

inline Matrix unvec_upper(std::span<const double> v, std::size_t c) {
  if (v.size() != vec_upper_size(c)) throw InputError("unvec_upper: bad length");
  Matrix s(c, c);
  std::size_t k = 0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i; j < c; ++j) s(i, j) = s(j, i) = v[k++];
  return s;
}

}  // namespace dsf

#endif  // DSF_LINALG_HPP
