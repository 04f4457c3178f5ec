#include "gmatch/matrix.hpp"

#include <cmath>

#include "gmatch/error.hpp"

namespace gmatch {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions");
  Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw Error(ErrorCode::ShapeMismatch, "matmul_nt inner dimensions");
  Matrix c(a.rows, b.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += ai[k] * bj[k];
      ci[j] = acc;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw Error(ErrorCode::ShapeMismatch, "matmul_tn inner dimensions");
  Matrix c(a.cols, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.cols; ++i) {
    double* ci = c.row(i);
    for (int k = 0; k < a.rows; ++k) {
      const double aki = a(k, i);
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

bool all_finite(const Matrix& m) {
  for (double x : m.data)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace gmatch
