#include "gnode/num/matrix.hpp"

#include <cmath>
#include <sstream>

#include "gnode/num/error.hpp"

namespace gnode::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
    : Matrix(rows, cols, std::vector<double>(values)) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Matrix Matrix::reshaped(std::size_t rows, std::size_t cols) const {
  if (rows * cols != size()) {
    throw ShapeError("reshape: cannot view " + shape_str() + " as " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  return Matrix(rows, cols, data_);
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::fill(double v) {
  for (auto& x : data_) x = v;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (auto& x : data_) x *= s;
  return *this;
}

double Matrix::item() const {
  if (size() != 1) throw ShapeError("item: expected 1x1, got " + shape_str());
  return data_[0];
}

std::string Matrix::shape_str() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

Matrix cholesky(const Matrix& s, const char* op) {
  if (s.rows() != s.cols()) throw ShapeError(std::string(op) + ": non-square " + s.shape_str());
  const std::size_t n = s.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
    // Relative pivot test: a pivot that has lost all but rounding noise of the
    // original diagonal is treated as singular.
    if (!(d > 1e-14 * std::abs(s(j, j))) || !std::isfinite(d)) {
      std::ostringstream os;
      os << "matrix is not positive definite (pivot " << j << " = " << d << ", diagonal "
         << s(j, j) << "); constraints are redundant or degenerate";
      throw SingularError(op, os.str());
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t p = 0; p < j; ++p) v -= l(i, p) * l(j, p);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

void cholesky_solve_inplace(const Matrix& l, Matrix& y) {
  const std::size_t n = l.rows();
  if (y.rows() != n) throw ShapeError("cholesky_solve: rhs " + y.shape_str() + " for " + l.shape_str());
  const std::size_t m = y.cols();
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = y(i, c);
      for (std::size_t p = 0; p < i; ++p) v -= l(i, p) * y(p, c);
      y(i, c) = v / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = y(i, c);
      for (std::size_t p = i + 1; p < n; ++p) v -= l(p, i) * y(p, c);
      y(i, c) = v / l(i, i);
    }
  }
}

Matrix solve_spd(const Matrix& s, const Matrix& y) {
  Matrix x = y;
  cholesky_solve_inplace(cholesky(s, "solve_spd"), x);
  return x;
}

}  // namespace gnode::num
