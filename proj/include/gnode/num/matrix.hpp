#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gnode::num {

// Dense row-major matrix of doubles. Vectors are n x 1 (column) or 1 x n
// (row) matrices; scalars are 1 x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  static Matrix identity(std::size_t n);
  static Matrix scalar(double v) { return Matrix(1, 1, v); }
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Same storage, new shape; rows * cols must be preserved.
  Matrix reshaped(std::size_t rows, std::size_t cols) const;
  Matrix transposed() const;

  void fill(double v);
  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  double item() const;
  std::string shape_str() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix matmul(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);
bool all_finite(std::span<const double> a);

void require_same_shape(const Matrix& a, const Matrix& b, const char* op);

// Cholesky factor L (lower) of a symmetric positive-definite matrix; only the
// lower triangle of `s` is read. Throws SingularError naming `op`.
Matrix cholesky(const Matrix& s, const char* op = "cholesky");

// Solves (L L^T) X = Y in place for every column of Y.
void cholesky_solve_inplace(const Matrix& l, Matrix& y);

Matrix solve_spd(const Matrix& s, const Matrix& y);

}  // namespace gnode::num
