#pragma once

#include <vector>

#include "gmatch/embed.hpp"
#include "gmatch/graph.hpp"
#include "gmatch/matrix.hpp"

namespace gmatch {

// Rectangular doubly-stochastic correspondence matrix, n <= m. Rows sum to 1;
// column sums stay at or below 1.
struct SoftAssignment {
  Matrix s;  // n x m

  int n() const { return s.rows; }
  int m() const { return s.cols; }
};

// One-to-one assignment of n source nodes into m >= n target slots.
struct PermutationMatrix {
  std::vector<int> mapping;  // mapping[i] in [0, m), all distinct
  int m = 0;

  int n() const { return static_cast<int>(mapping.size()); }
};

// Validates range and injectivity; throws InvalidPermutation.
PermutationMatrix make_permutation(std::vector<int> mapping, int m);
PermutationMatrix identity_permutation(int n, int m);

// Pairwise affinity between assignments (i -> j) and (a -> b), stored as an
// nm x nm symmetric matrix under the flat index convention (i, j) -> i*m + j.
// Diagonal entries hold node affinity max(0, <x_i, x_j>); off-diagonal entries
// hold the edge-pair indicator A_s[i][a] * A_t[j][b].
struct AffinityMatrix {
  int n = 0;
  int m = 0;
  Matrix mm;  // (n*m) x (n*m)

  int pair_index(int i, int j) const { return i * m + j; }
};

Matrix score_matrix(const Embeddings& hs, const Embeddings& ht);

SoftAssignment sinkhorn(const Matrix& scores, int iters, double temperature);

// Forward states retained for the unrolled backward pass: the padded m x m
// log-matrix after every normalization pass (columns then rows per iteration;
// the final pass normalizes rows).
struct SinkhornTrace {
  int n = 0;
  int m = 0;
  double temperature = 1.0;
  std::vector<Matrix> states;  // states[0] = initial log weights, then one per pass
};

SoftAssignment sinkhorn_traced(const Matrix& scores, int iters, double temperature,
                               SinkhornTrace& trace);
Matrix sinkhorn_backward(const SinkhornTrace& trace, const Matrix& ds);

struct LossAndGrad {
  double loss = 0.0;
  Matrix dl_ds;  // n x m
};

// Element-wise binary cross-entropy against the 0/1 ground-truth matrix, with
// S clamped to [1e-7, 1 - 1e-7]; the gradient is zero where the clamp engages.
LossAndGrad permutation_loss(const SoftAssignment& s, const PermutationMatrix& gt);

// Maximum-weight one-to-one assignment; ties resolve to the lexicographically
// smallest mapping.
PermutationMatrix hungarian_decode(const SoftAssignment& s);

double matching_accuracy(const PermutationMatrix& pred, const PermutationMatrix& gt);

AffinityMatrix build_affinity(const Graph& gs, const Graph& gt_graph);

double qap_objective(const AffinityMatrix& aff, const PermutationMatrix& p);

// Exact maximizer by enumeration over all injections (lexicographic
// tie-break). Throws TooLarge when m!/(m-n)! exceeds 10^6.
PermutationMatrix brute_force_qap(const AffinityMatrix& aff);

}  // namespace gmatch
