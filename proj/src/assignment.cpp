#include "gmatch/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gmatch/error.hpp"

namespace gmatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClamp = 1e-7;

double logsumexp(const double* x, int count, int stride) {
  double mx = -kInf;
  for (int k = 0; k < count; ++k) mx = std::max(mx, x[static_cast<size_t>(k) * stride]);
  double acc = 0.0;
  for (int k = 0; k < count; ++k) acc += std::exp(x[static_cast<size_t>(k) * stride] - mx);
  return mx + std::log(acc);
}

// Padded m x m log-weight matrix: real rows carry scores / temperature, dummy
// rows carry zeros so the marginals stay square.
Matrix initial_log_state(const Matrix& scores, double temperature) {
  const int n = scores.rows;
  const int m = scores.cols;
  Matrix x(m, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) x(i, j) = scores(i, j) / temperature;
  return x;
}

void column_pass(Matrix& x) {
  const int m = x.rows;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j) {
    const double lse = logsumexp(&x.data[j], m, m);
    for (int i = 0; i < m; ++i) x(i, j) -= lse;
  }
}

void row_pass(Matrix& x) {
  const int m = x.rows;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double lse = logsumexp(x.row(i), m, 1);
    for (int j = 0; j < m; ++j) x(i, j) -= lse;
  }
}

void check_sinkhorn_input(const Matrix& scores, int iters, double temperature) {
  if (scores.rows < 1 || scores.cols < scores.rows)
    throw Error(ErrorCode::ShapeMismatch, "scores must be n x m with 1 <= n <= m, got " +
                                              std::to_string(scores.rows) + " x " +
                                              std::to_string(scores.cols));
  if (iters < 1) throw Error(ErrorCode::InvalidArgument, "sinkhorn needs at least one iteration");
  if (!(temperature > 0.0))
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  if (!all_finite(scores)) throw Error(ErrorCode::NonFinite, "scores contain non-finite values");
}

SoftAssignment state_to_assignment(const Matrix& x, int n, int m) {
  SoftAssignment out;
  out.s = Matrix(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.s(i, j) = std::exp(x(i, j));
  return out;
}

}  // namespace

PermutationMatrix make_permutation(std::vector<int> mapping, int m) {
  if (static_cast<int>(mapping.size()) > m)
    throw Error(ErrorCode::InvalidPermutation, "more source nodes than target slots");
  std::vector<char> seen(m, 0);
  for (size_t i = 0; i < mapping.size(); ++i) {
    const int j = mapping[i];
    if (j < 0 || j >= m)
      throw Error(ErrorCode::InvalidPermutation,
                  "entry " + std::to_string(i) + " = " + std::to_string(j) + " outside [0, " +
                      std::to_string(m) + ")");
    if (seen[j])
      throw Error(ErrorCode::InvalidPermutation,
                  "target " + std::to_string(j) + " used twice, second time at entry " +
                      std::to_string(i));
    seen[j] = 1;
  }
  PermutationMatrix p;
  p.mapping = std::move(mapping);
  p.m = m;
  return p;
}

PermutationMatrix identity_permutation(int n, int m) {
  std::vector<int> mapping(n);
  for (int i = 0; i < n; ++i) mapping[i] = i;
  return make_permutation(std::move(mapping), m);
}

Matrix score_matrix(const Embeddings& hs, const Embeddings& ht) {
  if (hs.h.cols != ht.h.cols)
    throw Error(ErrorCode::WidthMismatch, "embedding widths " + std::to_string(hs.h.cols) +
                                              " and " + std::to_string(ht.h.cols) + " differ");
  return matmul_nt(hs.h, ht.h);
}

SoftAssignment sinkhorn(const Matrix& scores, int iters, double temperature) {
  check_sinkhorn_input(scores, iters, temperature);
  Matrix x = initial_log_state(scores, temperature);
  for (int it = 0; it < iters; ++it) {
    column_pass(x);
    row_pass(x);
  }
  return state_to_assignment(x, scores.rows, scores.cols);
}

SoftAssignment sinkhorn_traced(const Matrix& scores, int iters, double temperature,
                               SinkhornTrace& trace) {
  check_sinkhorn_input(scores, iters, temperature);
  trace.n = scores.rows;
  trace.m = scores.cols;
  trace.temperature = temperature;
  trace.states.clear();
  trace.states.reserve(2 * static_cast<size_t>(iters) + 1);
  trace.states.push_back(initial_log_state(scores, temperature));
  for (int it = 0; it < iters; ++it) {
    Matrix x = trace.states.back();
    column_pass(x);
    trace.states.push_back(x);
    row_pass(x);
    trace.states.push_back(std::move(x));
  }
  return state_to_assignment(trace.states.back(), trace.n, trace.m);
}

// Each pass subtracts a logsumexp along one axis; its adjoint subtracts the
// softmax-weighted gradient total of that axis. states[k] is the output of
// pass k, so exp(states[k]) is exactly the softmax the pass produced.
Matrix sinkhorn_backward(const SinkhornTrace& trace, const Matrix& ds) {
  const int n = trace.n;
  const int m = trace.m;
  if (trace.states.size() < 3 || trace.states.size() % 2 == 0)
    throw Error(ErrorCode::StaleIntermediates, "sinkhorn trace is incomplete");
  if (ds.rows != n || ds.cols != m)
    throw Error(ErrorCode::ShapeMismatch, "upstream gradient is not n x m");

  const Matrix& y_final = trace.states.back();
  Matrix g(m, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = ds(i, j) * std::exp(y_final(i, j));

  for (size_t k = trace.states.size() - 1; k >= 1; --k) {
    const Matrix& y = trace.states[k];
    const bool is_row_pass = (k % 2 == 0);
    Matrix next(m, m);
    if (is_row_pass) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < m; ++i) {
        double total = 0.0;
        for (int j = 0; j < m; ++j) total += g(i, j);
        for (int j = 0; j < m; ++j) next(i, j) = g(i, j) - std::exp(y(i, j)) * total;
      }
    } else {
#pragma omp parallel for schedule(static)
      for (int j = 0; j < m; ++j) {
        double total = 0.0;
        for (int i = 0; i < m; ++i) total += g(i, j);
        for (int i = 0; i < m; ++i) next(i, j) = g(i, j) - std::exp(y(i, j)) * total;
      }
    }
    g = std::move(next);
  }

  Matrix dscores(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) dscores(i, j) = g(i, j) / trace.temperature;
  return dscores;
}

LossAndGrad permutation_loss(const SoftAssignment& s, const PermutationMatrix& gt) {
  const int n = s.n();
  const int m = s.m();
  if (gt.n() != n || gt.m != m)
    throw Error(ErrorCode::ShapeMismatch, "ground truth is " + std::to_string(gt.n()) + " into " +
                                              std::to_string(gt.m) + ", assignment is " +
                                              std::to_string(n) + " x " + std::to_string(m));
  LossAndGrad out;
  out.dl_ds = Matrix(n, m);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double raw = s.s(i, j);
      const double sc = std::clamp(raw, kClamp, 1.0 - kClamp);
      const bool hit = gt.mapping[i] == j;
      loss -= hit ? std::log(sc) : std::log(1.0 - sc);
      if (raw > kClamp && raw < 1.0 - kClamp)
        out.dl_ds(i, j) = hit ? -1.0 / sc : 1.0 / (1.0 - sc);
    }
  }
  out.loss = loss;
  return out;
}

namespace {

// Shortest-augmenting-path solver for the square min-cost assignment problem.
// Returns the optimal total cost.
double jv_min(const std::vector<double>& cost, int size) {
  std::vector<double> u(size + 1, 0.0), v(size + 1, 0.0), minv(size + 1);
  std::vector<int> p(size + 1, 0), way(size + 1, 0);
  for (int i = 1; i <= size; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(size + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= size; ++j) {
        if (used[j]) continue;
        const double cur = cost[static_cast<size_t>(i0 - 1) * size + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= size; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= size; ++j)
    total += cost[static_cast<size_t>(p[j] - 1) * size + (j - 1)];
  return total;
}

// Maximum total weight of a full assignment of the given rows into the given
// columns (rows.size() <= cols.size(); missing rows are zero-weight dummies).
double jv_max(const Matrix& s, const std::vector<int>& rows, const std::vector<int>& cols) {
  if (rows.empty()) return 0.0;
  const int size = static_cast<int>(cols.size());
  std::vector<double> cost(static_cast<size_t>(size) * size, 0.0);
  for (size_t a = 0; a < rows.size(); ++a)
    for (size_t b = 0; b < cols.size(); ++b)
      cost[a * size + b] = -s(rows[a], cols[b]);
  return -jv_min(cost, size);
}

}  // namespace

PermutationMatrix hungarian_decode(const SoftAssignment& s) {
  const int n = s.n();
  const int m = s.m();
  if (n < 1 || m < n)
    throw Error(ErrorCode::ShapeMismatch, "assignment must be n x m with 1 <= n <= m");
  if (!all_finite(s.s)) throw Error(ErrorCode::NonFinite, "assignment contains non-finite values");

  std::vector<int> all_rows(n), all_cols(m);
  for (int i = 0; i < n; ++i) all_rows[i] = i;
  for (int j = 0; j < m; ++j) all_cols[j] = j;
  const double opt = jv_max(s.s, all_rows, all_cols);
  const double eps = 1e-12 * (1.0 + std::abs(opt));

  // Fix rows in order, each time taking the smallest column that still admits
  // an optimal completion; the result is the lexicographically smallest
  // optimal mapping.
  std::vector<int> mapping(n, -1);
  std::vector<char> used(m, 0);
  double fixed = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> tail_rows(all_rows.begin() + i + 1, all_rows.end());
    int fallback = -1;
    double fallback_val = -kInf;
    for (int j = 0; j < m; ++j) {
      if (used[j]) continue;
      std::vector<int> free_cols;
      free_cols.reserve(m - i - 1);
      for (int c = 0; c < m; ++c)
        if (!used[c] && c != j) free_cols.push_back(c);
      const double total = fixed + s.s(i, j) + jv_max(s.s, tail_rows, free_cols);
      if (total >= opt - eps) {
        mapping[i] = j;
        break;
      }
      if (total > fallback_val) {
        fallback_val = total;
        fallback = j;
      }
    }
    if (mapping[i] == -1) mapping[i] = fallback;  // numerical slack exhausted
    used[mapping[i]] = 1;
    fixed += s.s(i, mapping[i]);
  }
  return make_permutation(std::move(mapping), m);
}

double matching_accuracy(const PermutationMatrix& pred, const PermutationMatrix& gt) {
  if (pred.n() != gt.n() || pred.m != gt.m)
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth have different shapes");
  if (pred.n() == 0) throw Error(ErrorCode::InvalidArgument, "empty mapping");
  int hits = 0;
  for (int i = 0; i < pred.n(); ++i)
    if (pred.mapping[i] == gt.mapping[i]) ++hits;
  return static_cast<double>(hits) / pred.n();
}

AffinityMatrix build_affinity(const Graph& gs, const Graph& gt_graph) {
  validate_graph(gs);
  validate_graph(gt_graph);
  if (gs.feat_dim() != gt_graph.feat_dim())
    throw Error(ErrorCode::FeatureShapeMismatch, "feature widths differ");
  const int n = gs.n;
  const int m = gt_graph.n;
  if (n > m) throw Error(ErrorCode::ShapeMismatch, "source larger than target");
  const int nm = n * m;
  if (nm > 2048)
    throw Error(ErrorCode::TooLarge, "affinity would be " + std::to_string(nm) + "^2 entries");

  AffinityMatrix aff;
  aff.n = n;
  aff.m = m;
  aff.mm = Matrix(nm, nm);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < nm; ++p) {
    const int i = p / m;
    const int j = p % m;
    double* row = aff.mm.row(p);
    for (int a = 0; a < n; ++a) {
      const bool es = gs.edge(i, a);
      for (int b = 0; b < m; ++b) {
        const int q = a * m + b;
        if (q == p) continue;
        row[q] = (es && gt_graph.edge(j, b)) ? 1.0 : 0.0;
      }
    }
    double dot = 0.0;
    for (int k = 0; k < gs.feat_dim(); ++k) dot += gs.features(i, k) * gt_graph.features(j, k);
    row[p] = std::max(0.0, dot);
  }
  return aff;
}

double qap_objective(const AffinityMatrix& aff, const PermutationMatrix& p) {
  if (p.n() != aff.n || p.m != aff.m)
    throw Error(ErrorCode::IndexMismatch, "mapping does not match affinity dimensions");
  double total = 0.0;
  for (int i = 0; i < aff.n; ++i) {
    const int pi = aff.pair_index(i, p.mapping[i]);
    for (int a = 0; a < aff.n; ++a) total += aff.mm(pi, aff.pair_index(a, p.mapping[a]));
  }
  return total;
}

namespace {

struct QapSearch {
  const AffinityMatrix& aff;
  std::vector<int> mapping;
  std::vector<char> used;
  std::vector<int> chosen;  // chosen[t] = pair index of node t
  double best = -kInf;
  std::vector<int> best_mapping;

  explicit QapSearch(const AffinityMatrix& a)
      : aff(a), mapping(a.n, -1), used(a.m, 0), chosen(a.n, 0) {}

  // Depth-first over injections in lexicographic order; strict improvement
  // keeps the lexicographically smallest maximizer.
  void visit(int t, double value) {
    if (t == aff.n) {
      if (value > best) {
        best = value;
        best_mapping = mapping;
      }
      return;
    }
    for (int j = 0; j < aff.m; ++j) {
      if (used[j]) continue;
      const int pt = aff.pair_index(t, j);
      double delta = aff.mm(pt, pt);
      for (int prev = 0; prev < t; ++prev) delta += 2.0 * aff.mm(chosen[prev], pt);
      mapping[t] = j;
      chosen[t] = pt;
      used[j] = 1;
      visit(t + 1, value + delta);
      used[j] = 0;
      mapping[t] = -1;
    }
  }
};

}  // namespace

PermutationMatrix brute_force_qap(const AffinityMatrix& aff) {
  double count = 1.0;
  for (int t = 0; t < aff.n; ++t) count *= static_cast<double>(aff.m - t);
  if (count > 1e6)
    throw Error(ErrorCode::TooLarge, "injection count exceeds 10^6");

  QapSearch search(aff);
  search.visit(0, 0.0);
  return make_permutation(std::move(search.best_mapping), aff.m);
}

}  // namespace gmatch
