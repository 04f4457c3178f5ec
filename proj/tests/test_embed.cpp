#include "doctest.h"

#include <cmath>

#include "gmatch/embed.hpp"
#include "gmatch/error.hpp"
#include "gmatch/graph.hpp"
#include "gmatch/rng.hpp"

#include "test_util.hpp"

using namespace gmatch;

namespace {

PositionCoefficients single_node_q() {
  PositionCoefficients q;
  q.q = Matrix(1, 1, 1.0);
  return q;
}

Graph single_node_graph(double feature) {
  Matrix f(1, 1, feature);
  return make_graph(1, {}, std::move(f));
}

}  // namespace

TEST_CASE("init_params produces one weight per layer with doubled input rows") {
  const ModelParams p = init_params(4, {8, 16}, 0);
  REQUIRE(p.layers.size() == 2);
  CHECK(p.layers[0].w.rows == 8);
  CHECK(p.layers[0].w.cols == 8);
  CHECK(p.layers[1].w.rows == 16);
  CHECK(p.layers[1].w.cols == 16);
  CHECK(p.input_dim() == 4);
  CHECK(p.output_dim() == 16);
}

TEST_CASE("init_params needs at least one layer") {
  CHECK_ERRCODE(init_params(4, {}, 0), ErrorCode::InvalidDepth);
}

TEST_CASE("init_params is seed deterministic and bounded") {
  const ModelParams a = init_params(6, {12, 4}, 42);
  const ModelParams b = init_params(6, {12, 4}, 42);
  const ModelParams c = init_params(6, {12, 4}, 43);
  CHECK(a.layers[0].w == b.layers[0].w);
  CHECK(a.layers[1].w == b.layers[1].w);
  CHECK(a.layers[0].w != c.layers[0].w);

  for (size_t l = 0; l < a.layers.size(); ++l) {
    const Matrix& w = a.layers[l].w;
    const double bound = std::sqrt(6.0 / (w.rows + w.cols));
    double lo = 0.0, hi = 0.0;
    for (double v : w.data) {
      CHECK(std::fabs(v) <= bound);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo < -0.1 * bound);
    CHECK(hi > 0.1 * bound);
  }
}

TEST_CASE("single node layer keeps only the doubled self message") {
  const Graph g = single_node_graph(1.0);
  const PositionCoefficients q = single_node_q();

  LayerParams layer;
  layer.w = Matrix(2, 1);
  layer.w.data = {0.5, -2.0};
  Matrix out = layer_forward(g.features, q, layer, Activation::RELU, Aggregator::SUM);
  CHECK(out.rows == 1);
  CHECK(out.cols == 1);
  CHECK(out(0, 0) == 0.0);  // pre-activation -1.5, clipped

  layer.w.data = {0.5, 0.25};
  out = layer_forward(g.features, q, layer, Activation::RELU, Aggregator::SUM);
  CHECK(out(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("zero weights give zero embeddings") {
  RngEngine rng(2);
  const Graph g = testutil::random_graph(6, 0.5, 3, rng);
  const PositionCoefficients q = position_coefficients(bfs_distances(g, 3));

  ModelParams p = init_params(3, {5, 4}, 0);
  for (LayerParams& layer : p.layers)
    for (double& v : layer.w.data) v = 0.0;

  const EmbedTrace trace = embed_forward(g, q, p);
  for (double v : trace.embeddings().data) CHECK(v == 0.0);
}

TEST_CASE("layer_forward rejects mismatched shapes") {
  const Graph g = single_node_graph(1.0);
  const PositionCoefficients q = single_node_q();
  LayerParams layer;
  layer.w = Matrix(4, 2, 0.1);  // expects feature width 2
  CHECK_ERRCODE(layer_forward(g.features, q, layer, Activation::RELU, Aggregator::SUM),
                ErrorCode::ShapeMismatch);
  PositionCoefficients bad;
  bad.q = Matrix(2, 2, 0.5);
  LayerParams ok;
  ok.w = Matrix(2, 2, 0.1);
  CHECK_ERRCODE(layer_forward(g.features, bad, ok, Activation::RELU, Aggregator::SUM),
                ErrorCode::ShapeMismatch);
}

TEST_CASE("mean aggregation scales the summed message by 1/n") {
  RngEngine rng(9);
  const Graph g = testutil::random_graph(5, 0.6, 4, rng);
  const PositionCoefficients q = position_coefficients(bfs_distances(g, 2));
  LayerParams layer;
  layer.w = testutil::random_matrix(8, 3, rng, 0.0, 0.5);  // positive weights keep relu linear
  Matrix feats = g.features;
  for (double& v : feats.data) v = std::fabs(v);

  const Matrix sum = layer_forward(feats, q, layer, Activation::RELU, Aggregator::SUM);
  const Matrix mean = layer_forward(feats, q, layer, Activation::RELU, Aggregator::MEAN);
  REQUIRE(sum.same_shape(mean));
  for (size_t i = 0; i < sum.data.size(); ++i)
    CHECK(mean.data[i] == doctest::Approx(sum.data[i] / 5.0).epsilon(1e-12));
}

TEST_CASE("embedding is equivariant under node relabeling") {
  RngEngine rng(13);
  for (int t = 0; t < 10; ++t) {
    const int n = 4 + static_cast<int>(runif(rng) * 7);
    const Graph g = testutil::random_graph(n, 0.4, 5, rng);
    const std::vector<int> sigma = testutil::random_perm(n, rng);
    const Graph gp = testutil::permute_graph(g, sigma);

    const ModelParams p = init_params(5, {9, 7}, 100 + t);
    const EmbedTrace a = embed_forward(g, position_coefficients(bfs_distances(g, 3)), p);
    const EmbedTrace b = embed_forward(gp, position_coefficients(bfs_distances(gp, 3)), p);

    for (int v = 0; v < n; ++v)
      for (int k = 0; k < 7; ++k)
        CHECK(a.embeddings()(v, k) == doctest::Approx(b.embeddings()(sigma[v], k)).epsilon(1e-9));
  }
}

TEST_CASE("single positive layer gradient is the outer product") {
  const Graph g = make_graph(1, {}, Matrix(1, 2, 0.0));
  Graph gg = g;
  gg.features(0, 0) = 0.7;
  gg.features(0, 1) = 0.3;
  const PositionCoefficients q = single_node_q();

  ModelParams p;
  LayerParams layer;
  layer.w = Matrix(4, 3);
  layer.w.data = {0.2, 0.3, 0.1, 0.4, 0.2, 0.3, 0.1, 0.2, 0.4, 0.3, 0.1, 0.2};
  p.layers.push_back(layer);

  const EmbedTrace src = embed_forward(gg, q, p);
  for (double v : src.a[0].data) CHECK(v > 0.0);  // relu inactive everywhere

  Matrix dl(1, 3);
  dl.data = {1.5, -2.0, 0.5};
  const Matrix zero_dl(1, 3, 0.0);
  const GradientSet grads = embed_backward(p, src, src, dl, zero_dl);

  const Matrix& z = src.z[0];  // 1 x 4 aggregated input [x | x]
  REQUIRE(grads.dw.size() == 1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(grads.dw[0](i, j) == doctest::Approx(z(0, i) * dl(0, j)).epsilon(1e-12));
}

TEST_CASE("embed_backward rejects a stale trace") {
  const ModelParams p = init_params(2, {4}, 0);
  EmbedTrace empty;
  CHECK_ERRCODE(embed_backward(p, empty, empty, Matrix(1, 4, 0.0), Matrix(1, 4, 0.0)),
                ErrorCode::StaleIntermediates);
}

TEST_CASE("flatten and unflatten round trip") {
  ModelParams p = init_params(3, {6, 2}, 5);
  const std::vector<double> flat = flatten_params(p);
  CHECK(flat.size() == 6u * 6u + 12u * 2u);

  ModelParams q = init_params(3, {6, 2}, 99);
  unflatten_params(q, flat);
  CHECK(q.layers[0].w == p.layers[0].w);
  CHECK(q.layers[1].w == p.layers[1].w);

  std::vector<double> wrong(flat.size() + 1, 0.0);
  CHECK_ERRCODE(unflatten_params(q, wrong), ErrorCode::ShapeMismatch);
}

TEST_CASE("flatten_grads mirrors the parameter layout") {
  RngEngine rng(21);
  const Graph g = testutil::random_graph(4, 0.6, 3, rng);
  const PositionCoefficients q = position_coefficients(bfs_distances(g, 2));
  const ModelParams p = init_params(3, {5}, 3);
  const EmbedTrace tr = embed_forward(g, q, p);
  const GradientSet grads =
      embed_backward(p, tr, tr, testutil::random_matrix(4, 5, rng), Matrix(4, 5, 0.0));
  const std::vector<double> flat = flatten_grads(grads);
  CHECK(flat.size() == flatten_params(p).size());
  CHECK(flat == grads.dw[0].data);
}
