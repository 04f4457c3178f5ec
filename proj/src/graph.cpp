#include "gmatch/graph.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "gmatch/error.hpp"

namespace gmatch {

Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges, Matrix features) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "node count must be positive");
  Graph g;
  g.n = n;
  g.adj.assign(static_cast<size_t>(n) * n, 0);
  for (const auto& [i, j] : edges) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw Error(ErrorCode::InvalidArgument,
                  "edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    if (i == j) throw Error(ErrorCode::SelfLoop, "node " + std::to_string(i));
    g.adj[static_cast<size_t>(i) * n + j] = 1;
    g.adj[static_cast<size_t>(j) * n + i] = 1;
  }
  g.features = std::move(features);
  return validate_graph(g);
}

const Graph& validate_graph(const Graph& g) {
  const int n = g.n;
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "node count must be positive");
  if (static_cast<int>(g.adj.size()) != n * n)
    throw Error(ErrorCode::ShapeMismatch, "adjacency storage is not n*n");
  for (int i = 0; i < n; ++i) {
    if (g.adj[static_cast<size_t>(i) * n + i] != 0)
      throw Error(ErrorCode::SelfLoop, "node " + std::to_string(i));
    for (int j = i + 1; j < n; ++j) {
      if (g.adj[static_cast<size_t>(i) * n + j] != g.adj[static_cast<size_t>(j) * n + i])
        throw Error(ErrorCode::AsymmetricAdjacency,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  if (g.features.rows != n)
    throw Error(ErrorCode::FeatureShapeMismatch,
                "feature rows " + std::to_string(g.features.rows) + " for " + std::to_string(n) +
                    " nodes");
  if (g.features.cols < 1)
    throw Error(ErrorCode::FeatureShapeMismatch, "feature width must be at least 1");
  return g;
}

DistanceMatrix bfs_distances(const Graph& g, int r) {
  validate_graph(g);
  if (r < 1) throw Error(ErrorCode::InvalidDepth, "distance cap must be at least 1");
  const int n = g.n;
  DistanceMatrix dm;
  dm.n = n;
  dm.cap = r;
  dm.d.assign(static_cast<size_t>(n) * n, DistanceMatrix::kUnreachable);

  // One breadth-first sweep per source; rows are independent.
#pragma omp parallel for schedule(static)
  for (int src = 0; src < n; ++src) {
    int* row = dm.d.data() + static_cast<size_t>(src) * n;
    std::vector<int> queue;
    queue.reserve(n);
    queue.push_back(src);
    row[src] = 0;
    for (size_t head = 0; head < queue.size(); ++head) {
      const int v = queue[head];
      const int dv = row[v];
      if (dv == r) continue;
      for (int u = 0; u < n; ++u) {
        if (g.adj[static_cast<size_t>(v) * n + u] && row[u] == DistanceMatrix::kUnreachable) {
          row[u] = dv + 1;
          queue.push_back(u);
        }
      }
    }
  }
  return dm;
}

PositionCoefficients position_coefficients(const DistanceMatrix& dm) {
  const int n = dm.n;
  PositionCoefficients pc;
  pc.q = Matrix(n, n);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    double* qr = pc.q.row(v);
    double denom = 0.0;
    for (int u = 0; u < n; ++u) {
      const int d = dm.at(v, u);
      qr[u] = (d == DistanceMatrix::kUnreachable) ? 0.0 : std::exp(-static_cast<double>(d));
      denom += qr[u];
    }
    // the self term e^0 = 1 keeps the denominator positive
    for (int u = 0; u < n; ++u) qr[u] /= denom;
  }
  return pc;
}

}  // namespace gmatch
