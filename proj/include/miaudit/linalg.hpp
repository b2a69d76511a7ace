#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace miaudit {

// Dense row-major matrix of doubles. Sized for desk-scale models (hundreds
// of rows, tens of columns), so plain loops beat a BLAS dependency here and
// keep every gradient hand-checkable.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<double> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      double* crow = c.data.data() + static_cast<size_t>(i) * c.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

/// C = A^T * B
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: shape mismatch");
  Matrix c(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.data.data() + static_cast<size_t>(k) * a.cols;
    const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
    for (int i = 0; i < a.cols; ++i) {
      double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.data.data() + static_cast<size_t>(i) * c.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

/// C = A * B^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: shape mismatch");
  Matrix c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + static_cast<size_t>(j) * b.cols;
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

inline void add_row_broadcast(Matrix& m, std::span<const double> bias) {
  if (static_cast<int>(bias.size()) != m.cols) throw std::invalid_argument("bias size mismatch");
  for (int i = 0; i < m.rows; ++i) {
    double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
    for (int j = 0; j < m.cols; ++j) row[j] += bias[j];
  }
}

inline std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(static_cast<size_t>(m.cols), 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) s[static_cast<size_t>(j)] += m(i, j);
  return s;
}

}  // namespace miaudit
