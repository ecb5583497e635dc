#include "stablerepr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablerepr {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector Matrix::row(std::size_t i) const {
  return Vector(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
}

Vector Matrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  if (v.size() != rows_) throw std::invalid_argument("set_col: size mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::cols_range(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw std::invalid_argument("cols_range: out of range");
  Matrix m(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < count; ++j) m(i, j) = (*this)(i, first + j);
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("Matrix product: shape mismatch");
  Matrix out(rows_, rhs.cols_);
  // ikj loop order keeps the inner loop contiguous for row-major storage.
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      const double* brow = rhs.data_.data() + k * rhs.cols_;
      double* orow = out.data_.data() + i * rhs.cols_;
      for (std::size_t j = 0; j < rhs.cols_; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vector Matrix::operator*(const Vector& v) const {
  if (cols_ != v.size()) throw std::invalid_argument("Matrix*Vector: shape mismatch");
  Vector out(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* arow = data_.data() + i * cols_;
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += arow[j] * v[j];
    out[i] = s;
  }
  return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("Matrix sum: shape mismatch");
  Matrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += rhs.data_[i];
  return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("Matrix difference: shape mismatch");
  Matrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
  return out;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Vector Matrix::left_multiply(const Vector& v) const {
  if (rows_ != v.size()) throw std::invalid_argument("left_multiply: shape mismatch");
  Vector out(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const double* arow = data_.data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) out[j] += vi * arow[j];
  }
  return out;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vector axpy(double alpha, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  Vector out(y);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

Vector scale(double alpha, const Vector& x) {
  Vector out(x);
  for (double& v : out) v *= alpha;
  return out;
}

Vector subtract(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("subtract: size mismatch");
  Vector out(a);
  for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

LuFactorization::LuFactorization(Matrix a) : lu_(std::move(a)) {
  if (lu_.rows() != lu_.cols()) throw std::invalid_argument("LU: matrix must be square");
  const std::size_t n = lu_.rows();
  perm_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double colsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) colsum += std::abs(lu_(i, j));
    norm1_a_ = std::max(norm1_a_, colsum);
  }
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) { best = std::abs(lu_(i, k)); piv = i; }
    }
    perm_[k] = piv;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
      sign_ = -sign_;
    }
    const double pivot = lu_(k, k);
    min_pivot_ = std::min(min_pivot_, std::abs(pivot));
    max_pivot_ = std::max(max_pivot_, std::abs(pivot));
    if (pivot == 0.0) throw NumericalError("LU: exactly singular matrix at column " + std::to_string(k));
    for (std::size_t i = k + 1; i < n; ++i) {
      lu_(i, k) /= pivot;
      const double lik = lu_(i, k);
      if (lik == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= lik * lu_(k, j);
    }
  }
}

Vector LuFactorization::solve(const Vector& b) const {
  const std::size_t n = lu_.rows();
  if (b.size() != n) throw std::invalid_argument("LU solve: size mismatch");
  Vector x(b);
  for (std::size_t k = 0; k < n; ++k) std::swap(x[k], x[perm_[k]]);
  for (std::size_t i = 1; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
    x[ii] = s / lu_(ii, ii);
  }
  return x;
}

Matrix LuFactorization::solve(const Matrix& b) const {
  if (b.rows() != lu_.rows()) throw std::invalid_argument("LU solve: shape mismatch");
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, solve(b.col(j)));
  return x;
}

double LuFactorization::determinant() const {
  double d = sign_;
  for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
  return d;
}

double LuFactorization::condition_estimate() const {
  const std::size_t n = lu_.rows();
  double inv_norm = 0.0;
  // Probe ‖A⁻¹‖₁ with unit vectors and an all-ones vector.
  Vector ones(n, 1.0);
  auto colnorm = [](const Vector& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  };
  inv_norm = std::max(inv_norm, colnorm(solve(ones)) / static_cast<double>(n));
  for (std::size_t j = 0; j < std::min<std::size_t>(n, 8); ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    inv_norm = std::max(inv_norm, colnorm(solve(e)));
  }
  return norm1_a_ * inv_norm;
}

bool LuFactorization::nearly_singular(double rel_tol) const {
  return min_pivot_ <= rel_tol * max_pivot_;
}

double LuFactorization::min_pivot() const { return min_pivot_; }

Vector solve_linear(const Matrix& a, const Vector& b) { return LuFactorization(a).solve(b); }
Matrix solve_linear(const Matrix& a, const Matrix& b) { return LuFactorization(a).solve(b); }

}  // namespace stablerepr
