// Compares the OpenMP kernels against the serial long-double reference on a
// few representative workloads: timings plus the largest output difference.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "gmatch/graph.hpp"
#include "gmatch/matrix.hpp"
#include "gmatch/parallel.hpp"
#include "gmatch/reference.hpp"
#include "gmatch/rng.hpp"
#include "gmatch/assignment.hpp"

namespace {

using gmatch::Matrix;

template <class F>
double best_ms(F&& body, int reps) {
  double best = 1e300;
  for (int rep = 0; rep < reps; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    body();
    const auto stop = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.data.size(); ++k)
    worst = std::max(worst, std::abs(a.data[k] - b.data[k]));
  return worst;
}

Matrix random_matrix(int rows, int cols, gmatch::RngEngine& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = gmatch::rnorm(rng);
  return m;
}

void bench_matmul(int n, int k, int reps, gmatch::RngEngine& rng) {
  const Matrix a = random_matrix(n, k, rng);
  const Matrix b = random_matrix(n, k, rng);
  Matrix out_ref, out_par;
  const double ms_ref = best_ms([&] { out_ref = gmatch::reference::matmul_nt(a, b); }, reps);
  gmatch::set_threads(1);
  const double ms_one = best_ms([&] { out_par = gmatch::matmul_nt(a, b); }, reps);
  gmatch::set_threads(gmatch::max_threads());
  const double ms_all = best_ms([&] { out_par = gmatch::matmul_nt(a, b); }, reps);
  std::printf("matmul_nt %dx%d * %dx%d^T   reference %8.3f ms   threads(1) %8.3f ms   "
              "threads(%d) %8.3f ms   max|diff| %.3e\n",
              n, k, n, k, ms_ref, ms_one, gmatch::max_threads(), ms_all,
              max_abs_diff(out_ref, out_par));
}

void bench_sinkhorn(int n, int m, int iters, int reps, gmatch::RngEngine& rng) {
  const Matrix scores = random_matrix(n, m, rng);
  Matrix out_ref;
  gmatch::SoftAssignment out_par;
  const double ms_ref =
      best_ms([&] { out_ref = gmatch::reference::sinkhorn(scores, iters, 1.0); }, reps);
  gmatch::set_threads(1);
  const double ms_one = best_ms([&] { out_par = gmatch::sinkhorn(scores, iters, 1.0); }, reps);
  gmatch::set_threads(gmatch::max_threads());
  const double ms_all = best_ms([&] { out_par = gmatch::sinkhorn(scores, iters, 1.0); }, reps);
  std::printf("sinkhorn %dx%d iters=%-3d      reference %8.3f ms   threads(1) %8.3f ms   "
              "threads(%d) %8.3f ms   max|diff| %.3e\n",
              n, m, iters, ms_ref, ms_one, gmatch::max_threads(), ms_all,
              max_abs_diff(out_ref, out_par.s));
}

void bench_positions(int n, double p, int r, int reps, gmatch::RngEngine& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (gmatch::runif(rng) < p) edges.emplace_back(i, j);
  const gmatch::Graph g = gmatch::make_graph(n, edges, Matrix(n, 1));

  gmatch::PositionCoefficients out_par;
  Matrix out_ref;
  const double ms_ref = best_ms(
      [&] { out_ref = gmatch::reference::position_coefficients(gmatch::reference::bfs_distances(g, r)); },
      reps);
  gmatch::set_threads(1);
  const double ms_one = best_ms(
      [&] { out_par = gmatch::position_coefficients(gmatch::bfs_distances(g, r)); }, reps);
  gmatch::set_threads(gmatch::max_threads());
  const double ms_all = best_ms(
      [&] { out_par = gmatch::position_coefficients(gmatch::bfs_distances(g, r)); }, reps);
  std::printf("positions n=%-4d p=%.2f r=%d   reference %8.3f ms   threads(1) %8.3f ms   "
              "threads(%d) %8.3f ms   max|diff| %.3e\n",
              n, p, r, ms_ref, ms_one, gmatch::max_threads(), ms_all,
              max_abs_diff(out_ref, out_par.q));
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::string_view(argv[i]) == "--quick") quick = true;

  gmatch::RngEngine rng(7);
  const int reps = quick ? 2 : 5;
  std::printf("hardware threads: %d\n", gmatch::max_threads());
  if (quick) {
    bench_matmul(96, 48, reps, rng);
    bench_sinkhorn(24, 32, 30, reps, rng);
    bench_positions(120, 0.05, 3, reps, rng);
  } else {
    bench_matmul(256, 128, reps, rng);
    bench_sinkhorn(64, 96, 50, reps, rng);
    bench_positions(400, 0.02, 3, reps, rng);
  }
  return 0;
}
