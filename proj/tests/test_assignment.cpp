#include "doctest.h"

#include <cmath>
#include <limits>

#include "gmatch/assignment.hpp"
#include "gmatch/error.hpp"
#include "gmatch/reference.hpp"
#include "gmatch/rng.hpp"

#include "test_util.hpp"

using namespace gmatch;

namespace {

SoftAssignment soft(Matrix m) {
  SoftAssignment s;
  s.s = std::move(m);
  return s;
}

}  // namespace

TEST_CASE("make_permutation validates range and injectivity") {
  const PermutationMatrix p = make_permutation({2, 0, 1}, 3);
  CHECK(p.n() == 3);
  CHECK(p.m == 3);

  bool caught = false;
  try {
    make_permutation({0, 3}, 3);
  } catch (const Error& e) {
    caught = true;
    CHECK(e.code() == ErrorCode::InvalidPermutation);
    CHECK(std::string(e.what()).find("entry 1") != std::string::npos);
  }
  CHECK(caught);

  caught = false;
  try {
    make_permutation({1, 1}, 3);
  } catch (const Error& e) {
    caught = true;
    CHECK(e.code() == ErrorCode::InvalidPermutation);
    CHECK(std::string(e.what()).find("target 1") != std::string::npos);
  }
  CHECK(caught);

  CHECK_ERRCODE(make_permutation({0, 1, 2}, 2), ErrorCode::InvalidPermutation);
}

TEST_CASE("identity_permutation maps i to i") {
  const PermutationMatrix p = identity_permutation(3, 5);
  CHECK(p.mapping == std::vector<int>{0, 1, 2});
  CHECK(p.m == 5);
}

TEST_CASE("score_matrix is the embedding inner product") {
  Embeddings hs, ht;
  hs.h = Matrix(1, 2);
  hs.h.data = {1.0, 0.0};
  ht.h = Matrix(2, 2);
  ht.h.data = {0.5, 0.0, 0.0, 3.0};
  const Matrix s = score_matrix(hs, ht);
  REQUIRE(s.rows == 1);
  REQUIRE(s.cols == 2);
  CHECK(s(0, 0) == 0.5);
  CHECK(s(0, 1) == 0.0);

  ht.h = Matrix(2, 3, 0.0);
  CHECK_ERRCODE(score_matrix(hs, ht), ErrorCode::WidthMismatch);
}

TEST_CASE("sinkhorn turns constant scores into the uniform assignment") {
  for (double c : {0.0, 2.5, -4.0}) {
    const SoftAssignment s = sinkhorn(Matrix(3, 3, c), 10, 1.0);
    for (double v : s.s.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("sinkhorn with a strong diagonal approaches the identity") {
  Matrix scores(2, 2, 0.0);
  scores(0, 0) = scores(1, 1) = 10.0;
  const SoftAssignment s = sinkhorn(scores, 100, 1.0);
  CHECK(s.s(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s.s(1, 1) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s.s(0, 1) < 1e-3);
  CHECK(s.s(1, 0) < 1e-3);
}

TEST_CASE("rectangular uniform scores spread rows evenly") {
  const SoftAssignment s = sinkhorn(Matrix(2, 3, 1.0), 20, 1.0);
  for (double v : s.s.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  for (int j = 0; j < 3; ++j)
    CHECK(s.s(0, j) + s.s(1, j) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("sinkhorn rows are stochastic and columns stay feasible") {
  RngEngine rng(19);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(runif(rng) * 5);
    const int m = n + static_cast<int>(runif(rng) * 4);
    const SoftAssignment s = sinkhorn(testutil::random_matrix(n, m, rng, -2.0, 2.0), 60, 0.8);
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) {
        CHECK(s.s(i, j) > 0.0);
        CHECK(s.s(i, j) < 1.0);
        row += s.s(i, j);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }
    // columns converge toward feasibility, they are not exact at finite iterations
    for (int j = 0; j < m; ++j) {
      double col = 0.0;
      for (int i = 0; i < n; ++i) col += s.s(i, j);
      CHECK(col <= 1.0 + 1e-5);
    }
  }
}

TEST_CASE("sinkhorn matches the probability space baseline") {
  RngEngine rng(29);
  for (int t = 0; t < 15; ++t) {
    const int n = 2 + t % 4;
    const int m = n + t % 3;
    const Matrix scores = testutil::random_matrix(n, m, rng, -3.0, 3.0);
    const SoftAssignment mine = sinkhorn(scores, 25, 1.3);
    const Matrix ref = reference::sinkhorn(scores, 25, 1.3);
    CHECK(testutil::max_abs_diff(mine.s, ref) < 1e-9);
  }
}

TEST_CASE("sinkhorn rejects bad input") {
  CHECK_ERRCODE(sinkhorn(Matrix(2, 2, 0.0), 0, 1.0), ErrorCode::InvalidArgument);
  CHECK_ERRCODE(sinkhorn(Matrix(2, 2, 0.0), 5, 0.0), ErrorCode::InvalidArgument);
  CHECK_ERRCODE(sinkhorn(Matrix(3, 2, 0.0), 5, 1.0), ErrorCode::ShapeMismatch);
  CHECK_ERRCODE(sinkhorn(Matrix(0, 2, 0.0), 5, 1.0), ErrorCode::ShapeMismatch);

  Matrix bad(2, 2, 0.0);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_ERRCODE(sinkhorn(bad, 5, 1.0), ErrorCode::NonFinite);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_ERRCODE(sinkhorn(bad, 5, 1.0), ErrorCode::NonFinite);
}

TEST_CASE("permuting score rows permutes the assignment rows") {
  RngEngine rng(37);
  for (int t = 0; t < 10; ++t) {
    const int n = 5;
    const int m = 7;
    const Matrix scores = testutil::random_matrix(n, m, rng, -2.0, 2.0);
    const std::vector<int> sigma = testutil::random_perm(n, rng);
    Matrix permuted(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) permuted(sigma[i], j) = scores(i, j);

    const SoftAssignment a = sinkhorn(scores, 20, 1.0);
    const SoftAssignment b = sinkhorn(permuted, 20, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        CHECK(std::fabs(a.s(i, j) - b.s(sigma[i], j)) < 1e-12);
  }
}

TEST_CASE("traced sinkhorn agrees with the plain one and keeps every pass") {
  RngEngine rng(41);
  const Matrix scores = testutil::random_matrix(3, 4, rng);
  SinkhornTrace trace;
  const SoftAssignment a = sinkhorn_traced(scores, 7, 0.9, trace);
  const SoftAssignment b = sinkhorn(scores, 7, 0.9);
  CHECK(a.s == b.s);
  CHECK(trace.states.size() == 2u * 7u + 1u);
  CHECK(trace.n == 3);
  CHECK(trace.m == 4);
}

TEST_CASE("sinkhorn backward matches central differences") {
  RngEngine rng(43);
  const int n = 3, m = 4, iters = 25;
  const double tau = 0.7;
  const Matrix scores = testutil::random_matrix(n, m, rng, -2.0, 2.0);
  const Matrix c = testutil::random_matrix(n, m, rng, -1.0, 1.0);

  SinkhornTrace trace;
  sinkhorn_traced(scores, iters, tau, trace);
  const Matrix analytic = sinkhorn_backward(trace, c);

  const double h = 1e-6;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      Matrix up = scores, down = scores;
      up(i, j) += h;
      down(i, j) -= h;
      double lu = 0.0, ld = 0.0;
      const SoftAssignment su = sinkhorn(up, iters, tau);
      const SoftAssignment sd = sinkhorn(down, iters, tau);
      for (size_t k = 0; k < su.s.data.size(); ++k) {
        lu += c.data[k] * su.s.data[k];
        ld += c.data[k] * sd.s.data[k];
      }
      const double numeric = (lu - ld) / (2.0 * h);
      CHECK(analytic(i, j) == doctest::Approx(numeric).epsilon(1e-5));
    }
}

TEST_CASE("sinkhorn backward rejects a stale trace") {
  SinkhornTrace empty;
  CHECK_ERRCODE(sinkhorn_backward(empty, Matrix(2, 2, 0.0)), ErrorCode::StaleIntermediates);
}

TEST_CASE("loss at an exact one hot prediction is essentially zero") {
  const PermutationMatrix gt = make_permutation({2, 0, 1}, 4);
  Matrix s(3, 4, 0.0);
  for (int i = 0; i < 3; ++i) s(i, gt.mapping[i]) = 1.0;
  const LossAndGrad lg = permutation_loss(soft(s), gt);
  CHECK(std::fabs(lg.loss - 12.0 * (-std::log(1.0 - 1e-7))) < 1e-5);
  CHECK(lg.loss < 1e-4);
  for (double g : lg.dl_ds.data) CHECK(g == 0.0);  // every entry sits on the clamp
}

TEST_CASE("uniform two by two prediction has the closed form loss and gradient") {
  const PermutationMatrix gt = make_permutation({0, 1}, 2);
  const LossAndGrad lg = permutation_loss(soft(Matrix(2, 2, 0.5)), gt);
  CHECK(lg.loss == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(lg.dl_ds(0, 0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(lg.dl_ds(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(lg.dl_ds(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(lg.dl_ds(1, 1) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("permutation_loss rejects mismatched shapes") {
  const PermutationMatrix gt = make_permutation({0, 1}, 2);
  CHECK_ERRCODE(permutation_loss(soft(Matrix(2, 3, 0.5)), gt), ErrorCode::ShapeMismatch);
  CHECK_ERRCODE(permutation_loss(soft(Matrix(3, 2, 0.5)), gt), ErrorCode::ShapeMismatch);
}

TEST_CASE("decode picks the off diagonal when it dominates") {
  Matrix s(2, 2);
  s.data = {0.1, 0.9, 0.9, 0.1};
  const PermutationMatrix p = hungarian_decode(soft(s));
  CHECK(p.mapping == std::vector<int>{1, 0});
}

TEST_CASE("decode ties resolve to the lexicographically smallest mapping") {
  CHECK(hungarian_decode(soft(Matrix(2, 2, 0.5))).mapping == std::vector<int>{0, 1});
  CHECK(hungarian_decode(soft(Matrix(3, 3, 0.4))).mapping == std::vector<int>{0, 1, 2});

  Matrix s(3, 3);
  s.data = {0.6, 0.6, 0.1, 0.6, 0.6, 0.1, 0.1, 0.1, 0.9};
  CHECK(hungarian_decode(soft(s)).mapping == std::vector<int>{0, 1, 2});
}

TEST_CASE("decode agrees with exhaustive enumeration") {
  RngEngine rng(47);
  for (int t = 0; t < 30; ++t) {
    const Matrix s = testutil::random_matrix(6, 6, rng, 0.0, 1.0);
    CHECK(hungarian_decode(soft(s)).mapping == reference::enumerate_decode(s));
  }
  for (int t = 0; t < 20; ++t) {
    const Matrix s = testutil::random_matrix(3, 5, rng, 0.0, 1.0);
    CHECK(hungarian_decode(soft(s)).mapping == reference::enumerate_decode(s));
  }
}

TEST_CASE("matching_accuracy counts exact hits") {
  const PermutationMatrix gt = make_permutation({0, 1, 2, 3}, 4);
  CHECK(matching_accuracy(gt, gt) == 1.0);
  const PermutationMatrix half = make_permutation({0, 1, 3, 2}, 4);
  CHECK(matching_accuracy(half, gt) == 0.5);
  const PermutationMatrix other = make_permutation({1, 0, 3, 2}, 4);
  CHECK(matching_accuracy(other, gt) == 0.0);
}

TEST_CASE("matching_accuracy rejects shape mismatch and empty input") {
  const PermutationMatrix a = make_permutation({0, 1}, 2);
  const PermutationMatrix b = make_permutation({0, 1, 2}, 3);
  CHECK_ERRCODE(matching_accuracy(a, b), ErrorCode::ShapeMismatch);
  const PermutationMatrix empty = make_permutation({}, 0);
  CHECK_ERRCODE(matching_accuracy(empty, empty), ErrorCode::InvalidArgument);
}
