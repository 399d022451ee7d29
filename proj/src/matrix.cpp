#include "csgnn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csgnn/error.hpp"

namespace csgnn {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ShapeError("matrix: " + std::to_string(values_.size()) + " values for " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> v;
  v.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("from_rows: ragged rows");
    v.insert(v.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(v));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "add");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "sub");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order: each out(i, j) still receives its terms in increasing k.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T x " + shape_str(b));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " x " + shape_str(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
  return out;
}

void softmax_row(std::span<const double> in, std::span<double> out) {
  double mx = -INFINITY;
  for (double x : in) mx = std::max(mx, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    out[k] = std::exp(in[k] - mx);
    sum += out[k];
  }
  for (double& x : out) x /= sum;
}

double log_sum_exp(std::span<const double> row) {
  double mx = -INFINITY;
  for (double x : row) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double x : row) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) softmax_row(m.row(r), out.row(r));
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
  return out;
}

double max_abs(const Matrix& m) {
  double mx = 0.0;
  for (double x : m.values()) mx = std::max(mx, std::abs(x));
  return mx;
}

double frobenius_sq(const Matrix& m) {
  double s = 0.0;
  for (double x : m.values()) s += x * x;
  return s;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  require_same_shape(analytic, numeric, "relative_error");
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic.values()[i] - numeric.values()[i]));
  }
  const double scale = std::max(max_abs(analytic), max_abs(numeric));
  if (scale == 0.0) return 0.0;
  return diff / scale;
}

Matrix finite_diff_grad(const ScalarFn& f, const Matrix& at, double h) {
  if (!(h > 0.0)) throw ParameterError("finite_diff_grad: step must be positive");
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + h;
    const double up = f(probe);
    probe.values()[i] = orig - h;
    const double down = f(probe);
    probe.values()[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value at entry " +
                         std::to_string(i));
    }
    grad.values()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace csgnn
