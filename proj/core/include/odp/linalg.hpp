#pragma once

#include <cstddef>
#include <vector>

#include "odp/error.hpp"

namespace odp {

/// Dense row-major matrix of doubles. Vectors are stored as 1 x n.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return v.size(); }
};

/// C = A * B. Single accumulation order (i,k,j) shared by every call site so
/// tape forward passes and plain evaluation produce identical doubles.
inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ConfigError("mat_mul: inner dimension mismatch");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.v[static_cast<std::size_t>(i) * a.cols];
    double* crow = &c.v[static_cast<std::size_t>(i) * b.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = &b.v[static_cast<std::size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

}  // namespace odp
