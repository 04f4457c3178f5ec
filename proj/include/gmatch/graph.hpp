#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gmatch/matrix.hpp"

namespace gmatch {

// Undirected graph with a symmetric 0/1 adjacency matrix, zero diagonal, and
// one real feature row per node.
struct Graph {
  int n = 0;
  std::vector<uint8_t> adj;  // n*n, row-major
  Matrix features;           // n x feat_dim

  bool edge(int i, int j) const { return adj[static_cast<size_t>(i) * n + j] != 0; }
  int feat_dim() const { return features.cols; }
};

Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges, Matrix features);

// Throws AsymmetricAdjacency, SelfLoop or FeatureShapeMismatch naming the
// first offending index; returns its argument untouched otherwise.
const Graph& validate_graph(const Graph& g);

// Hop-count distances capped at r. Entries beyond the cap, and pairs with no
// path, carry kUnreachable.
struct DistanceMatrix {
  static constexpr int kUnreachable = -1;

  int n = 0;
  int cap = 0;
  std::vector<int> d;  // n*n

  int at(int v, int u) const { return d[static_cast<size_t>(v) * n + u]; }
};

DistanceMatrix bfs_distances(const Graph& g, int r);

// Row-stochastic relative position weights: q(v,u) = e^{-d(v,u)} normalized
// over all anchors u (every node is an anchor, v itself included).
// Unreachable anchors get weight zero.
struct PositionCoefficients {
  Matrix q;  // n x n
};

PositionCoefficients position_coefficients(const DistanceMatrix& dm);

}  // namespace gmatch
