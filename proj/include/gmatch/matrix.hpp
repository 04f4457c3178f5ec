#pragma once

#include <cstddef>
#include <vector>

namespace gmatch {

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const Matrix& o) const = default;
};

// All products keep the per-element accumulation order fixed (ascending k),
// so results are identical for any thread count.
Matrix matmul(const Matrix& a, const Matrix& b);     // (r x k) * (k x c)
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // (r x k) * (c x k)^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // (k x r)^T * (k x c)

bool all_finite(const Matrix& m);

}  // namespace gmatch
