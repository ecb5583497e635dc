#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablerepr {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

/// Numeric failure (non-convergence, singular systems, breakdown).
/// Distinct from std::invalid_argument, which we throw on bad inputs.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense row-major matrix of doubles. Value semantics throughout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Vector row(std::size_t i) const;
  Vector col(std::size_t j) const;
  void set_col(std::size_t j, const Vector& v);
  Matrix cols_range(std::size_t first, std::size_t count) const;

  Matrix transpose() const;
  Matrix operator*(const Matrix& rhs) const;
  Vector operator*(const Vector& v) const;
  Matrix operator+(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix& operator*=(double s);
  friend Matrix operator*(double s, Matrix m) { m *= s; return m; }

  /// Left product vᵀM, returned as a vector.
  Vector left_multiply(const Vector& v) const;

  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vector data_;
};

// Vector helpers.
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm_inf(const Vector& a);
Vector axpy(double alpha, const Vector& x, const Vector& y);  // alpha*x + y
Vector scale(double alpha, const Vector& x);
Vector subtract(const Vector& a, const Vector& b);

/// LU factorization with partial pivoting; throws NumericalError on exact
/// singularity. solve() works for multiple right-hand sides.
class LuFactorization {
 public:
  explicit LuFactorization(Matrix a);

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  double determinant() const;
  /// Cheap 1-norm condition estimate (exact ‖A‖₁ times a probed ‖A⁻¹‖₁ lower
  /// bound); used for diagnostics only.
  double condition_estimate() const;
  bool nearly_singular(double rel_tol = 1e-13) const;
  double min_pivot() const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
  double norm1_a_ = 0.0;
  double min_pivot_ = 0.0, max_pivot_ = 0.0;
};

Vector solve_linear(const Matrix& a, const Vector& b);
Matrix solve_linear(const Matrix& a, const Matrix& b);

}  // namespace stablerepr
