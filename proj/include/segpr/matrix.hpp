#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "segpr/errors.hpp"

namespace segpr {

// Dense row-major matrix of doubles. The only tensor type in the library;
// row and column vectors are 1xM and Nx1 matrices. Matrices with zero rows
// are legal (empty gather results).
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows),
        cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
              fill) {
    if (rows < 0 || cols < 0) {
      throw DimensionError("matrix dimensions must be nonnegative");
    }
  }

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols, 0.0); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<double> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  // this += s * o
  void add_scaled(const Matrix& o, double s) {
    if (!same_shape(o)) throw DimensionError("add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  }

  double squared_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return s;
  }

  bool all_finite() const {
    for (double x : data_) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline void require_shape(const Matrix& m, int rows, int cols,
                          const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

// out += a * b
inline void add_matmul(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols()) {
    throw DimensionError("add_matmul: shape mismatch");
  }
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      auto orow = out.row(i);
      for (int j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dims differ");
  Matrix out(a.rows(), b.cols());
  add_matmul(out, a, b);
  return out;
}

// out += a * b^T
inline void add_matmul_nt(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw DimensionError("add_matmul_nt: shape mismatch");
  }
  for (int i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    auto orow = out.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      orow[j] += s;
    }
  }
}

// out += a^T * b
inline void add_matmul_tn(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw DimensionError("add_matmul_tn: shape mismatch");
  }
  for (int k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const auto brow = b.row(k);
    for (int i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto orow = out.row(i);
      for (int j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
}

}  // namespace segpr
