#pragma once

#include <cstdint>
#include <vector>

#include "gmatch/graph.hpp"
#include "gmatch/matrix.hpp"

namespace gmatch {

enum class Activation { RELU };
enum class Aggregator { SUM, MEAN };

// One embedding layer. The weight has 2*f_in rows: the aggregated message is
// the concatenation of the node's own features and the anchor's features.
struct LayerParams {
  Matrix w;  // (2*f_in) x f_out

  int f_in() const { return w.rows / 2; }
  int f_out() const { return w.cols; }
};

struct ModelParams {
  std::vector<LayerParams> layers;
  Activation activation = Activation::RELU;
  Aggregator aggregator = Aggregator::SUM;

  int input_dim() const { return layers.front().f_in(); }
  int output_dim() const { return layers.back().f_out(); }
};

struct Embeddings {
  Matrix h;  // n x f_out of the last layer
};

// Per-layer weight gradients, shape-congruent with ModelParams, plus the loss
// value they differentiate.
struct GradientSet {
  std::vector<Matrix> dw;
  double loss = 0.0;
};

// Uniform init on [-a, a] with a = sqrt(6 / (2*f_in + f_out)) per layer.
ModelParams init_params(int f_in, const std::vector<int>& hidden_widths, uint64_t seed,
                        Activation activation = Activation::RELU,
                        Aggregator aggregator = Aggregator::SUM);

Matrix layer_forward(const Matrix& h_prev, const PositionCoefficients& q,
                     const LayerParams& layer, Activation activation, Aggregator aggregator);

// Everything embed_backward needs from one forward pass: layer inputs h[l],
// aggregated messages z[l] and pre-activations a[l].
struct EmbedTrace {
  Matrix q;                        // n x n position coefficients used
  std::vector<double> q_row_sums;  // cached row sums of q
  std::vector<Matrix> h;           // h[0] = features, h[l] = layer l output
  std::vector<Matrix> z;           // z[l] = aggregated input of layer l+1, n x 2*f_in
  std::vector<Matrix> a;           // a[l] = pre-activation of layer l+1, n x f_out

  const Matrix& embeddings() const { return h.back(); }
};

EmbedTrace embed_forward(const Graph& g, const PositionCoefficients& q, const ModelParams& params);

// Weight gradients for a source/target pass with shared weights; both towers
// accumulate into the same GradientSet.
GradientSet embed_backward(const ModelParams& params, const EmbedTrace& src, const EmbedTrace& dst,
                           const Matrix& dl_dhs, const Matrix& dl_dht);

// Flat parameter vector in fixed layer-major, row-major order.
std::vector<double> flatten_params(const ModelParams& params);
void unflatten_params(ModelParams& params, const std::vector<double>& flat);
std::vector<double> flatten_grads(const GradientSet& grads);

}  // namespace gmatch
