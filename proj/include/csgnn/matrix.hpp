#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace csgnn {

/// Guard added to every division by a data-dependent quantity.
inline constexpr double kEps = 1e-12;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// Builds from nested rows; all rows must have equal length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  void fill(double v);
  Matrix transposed() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

/// Dense product a*b. Accumulates each output entry left to right over k.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& m);
/// Softmax of a single row written into out.
void softmax_row(std::span<const double> in, std::span<double> out);
/// log(sum(exp(row))) computed stably.
double log_sum_exp(std::span<const double> row);

Matrix relu(const Matrix& m);

double max_abs(const Matrix& m);
double frobenius_sq(const Matrix& m);

/// Largest absolute difference over the largest magnitude of either input.
/// Zero when both are identically zero.
double relative_error(const Matrix& analytic, const Matrix& numeric);

using ScalarFn = std::function<double(const Matrix&)>;

/// Central-difference gradient of f at the given point, one entry at a time.
/// Throws NumericError if f returns a non-finite value.
Matrix finite_diff_grad(const ScalarFn& f, const Matrix& at, double h = 1e-5);

}  // namespace csgnn
