#pragma once

#include <vector>

#include "gmatch/assignment.hpp"
#include "gmatch/graph.hpp"
#include "gmatch/matrix.hpp"

// Straightforward serial implementations, independent of the production
// kernels. They accumulate in long double and serve as oracles in the test
// suites and as the serial baseline in the benchmark.
namespace gmatch::reference {

// exp(-d) softmax per row, unreachable entries excluded.
Matrix position_coefficients(const DistanceMatrix& dm);

// All-pairs capped distances by min-plus relaxation (Floyd-Warshall).
DistanceMatrix bfs_distances(const Graph& g, int r);

// Plain probability-space Sinkhorn on exp(scores/temperature) with dummy-row
// padding; alternates column and row sweeps, rows last.
Matrix sinkhorn(const Matrix& scores, int iters, double temperature);

Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Argmax of sum_i s[i][mapping[i]] over all injections, iterated in
// lexicographic order with strict improvement.
std::vector<int> enumerate_decode(const Matrix& s);

}  // namespace gmatch::reference
