#include "gmatch/reference.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gmatch/error.hpp"

namespace gmatch::reference {

Matrix position_coefficients(const DistanceMatrix& dm) {
  Matrix q(dm.n, dm.n);
  for (int v = 0; v < dm.n; ++v) {
    std::vector<long double> w(dm.n, 0.0L);
    long double total = 0.0L;
    for (int u = 0; u < dm.n; ++u) {
      const int d = dm.at(v, u);
      if (d == DistanceMatrix::kUnreachable) continue;
      w[u] = std::exp(static_cast<long double>(-d));
      total += w[u];
    }
    for (int u = 0; u < dm.n; ++u) q(v, u) = static_cast<double>(w[u] / total);
  }
  return q;
}

DistanceMatrix bfs_distances(const Graph& g, int r) {
  validate_graph(g);
  if (r < 1) throw Error(ErrorCode::InvalidDepth, "distance cap must be at least 1");
  const int n = g.n;
  const int inf = n + 1;  // beyond any simple path length
  std::vector<int> d(static_cast<size_t>(n) * n, inf);
  for (int v = 0; v < n; ++v) d[static_cast<size_t>(v) * n + v] = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.edge(i, j)) d[static_cast<size_t>(i) * n + j] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int via = d[static_cast<size_t>(i) * n + k] + d[static_cast<size_t>(k) * n + j];
        if (via < d[static_cast<size_t>(i) * n + j]) d[static_cast<size_t>(i) * n + j] = via;
      }
  DistanceMatrix dm;
  dm.n = n;
  dm.cap = r;
  dm.d.resize(d.size());
  // the sentinel must stay unreachable even when the cap exceeds it
  for (size_t k = 0; k < d.size(); ++k)
    dm.d[k] = (d[k] >= inf || d[k] > r) ? DistanceMatrix::kUnreachable : d[k];
  return dm;
}

Matrix sinkhorn(const Matrix& scores, int iters, double temperature) {
  const int n = scores.rows;
  const int m = scores.cols;
  if (n < 1 || m < n) throw Error(ErrorCode::ShapeMismatch, "scores must be n x m with n <= m");
  if (iters < 1 || !(temperature > 0.0))
    throw Error(ErrorCode::InvalidArgument, "bad sinkhorn settings");

  std::vector<long double> p(static_cast<size_t>(m) * m, 1.0L);  // dummy rows = exp(0)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      p[static_cast<size_t>(i) * m + j] =
          std::exp(static_cast<long double>(scores(i, j)) / temperature);

  for (int it = 0; it < iters; ++it) {
    for (int j = 0; j < m; ++j) {
      long double total = 0.0L;
      for (int i = 0; i < m; ++i) total += p[static_cast<size_t>(i) * m + j];
      for (int i = 0; i < m; ++i) p[static_cast<size_t>(i) * m + j] /= total;
    }
    for (int i = 0; i < m; ++i) {
      long double total = 0.0L;
      for (int j = 0; j < m; ++j) total += p[static_cast<size_t>(i) * m + j];
      for (int j = 0; j < m; ++j) p[static_cast<size_t>(i) * m + j] /= total;
    }
  }

  Matrix s(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) s(i, j) = static_cast<double>(p[static_cast<size_t>(i) * m + j]);
  return s;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw Error(ErrorCode::ShapeMismatch, "inner dimensions differ");
  Matrix out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.rows; ++j) {
      long double acc = 0.0L;
      for (int k = 0; k < a.cols; ++k)
        acc += static_cast<long double>(a(i, k)) * static_cast<long double>(b(j, k));
      out(i, j) = static_cast<double>(acc);
    }
  return out;
}

namespace {

void decode_visit(const Matrix& s, int row, std::vector<int>& mapping, std::vector<char>& used,
                  long double value, long double& best, std::vector<int>& best_mapping) {
  if (row == s.rows) {
    if (value > best) {
      best = value;
      best_mapping = mapping;
    }
    return;
  }
  for (int j = 0; j < s.cols; ++j) {
    if (used[j]) continue;
    used[j] = 1;
    mapping[row] = j;
    decode_visit(s, row + 1, mapping, used, value + static_cast<long double>(s(row, j)), best,
                 best_mapping);
    used[j] = 0;
  }
}

}  // namespace

std::vector<int> enumerate_decode(const Matrix& s) {
  if (s.rows < 1 || s.cols < s.rows)
    throw Error(ErrorCode::ShapeMismatch, "matrix must be n x m with n <= m");
  std::vector<int> mapping(s.rows, -1), best_mapping;
  std::vector<char> used(s.cols, 0);
  long double best = -std::numeric_limits<long double>::infinity();
  decode_visit(s, 0, mapping, used, 0.0L, best, best_mapping);
  return best_mapping;
}

}  // namespace gmatch::reference
