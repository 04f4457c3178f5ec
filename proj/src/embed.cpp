#include "gmatch/embed.hpp"

#include <cmath>
#include <string>

#include "gmatch/error.hpp"
#include "gmatch/rng.hpp"

namespace gmatch {

namespace {

double agg_scale(Aggregator agg, int n) {
  return agg == Aggregator::MEAN ? 1.0 / static_cast<double>(n) : 1.0;
}

std::vector<double> row_sums(const Matrix& q) {
  std::vector<double> sums(q.rows);
  for (int v = 0; v < q.rows; ++v) {
    double acc = 0.0;
    const double* qr = q.row(v);
    for (int u = 0; u < q.cols; ++u) acc += qr[u];
    sums[v] = acc;
  }
  return sums;
}

// Aggregated message per node: z_v = scale * sum_u q(v,u) * [h_v | h_u].
// The left block reduces to h_v times the row sum of q; the right block is
// the weighted anchor average q * h_prev.
Matrix aggregate(const Matrix& h_prev, const Matrix& q, const std::vector<double>& q_row_sums,
                 Aggregator agg) {
  const int n = h_prev.rows;
  const int f = h_prev.cols;
  const double scale = agg_scale(agg, n);
  Matrix z(n, 2 * f);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    double* zv = z.row(v);
    const double* hv = h_prev.row(v);
    const double sum_q = q_row_sums[v];
    for (int k = 0; k < f; ++k) zv[k] = scale * sum_q * hv[k];
    const double* qv = q.row(v);
    for (int u = 0; u < n; ++u) {
      const double w = qv[u];
      const double* hu = h_prev.row(u);
      for (int k = 0; k < f; ++k) zv[f + k] += w * hu[k];
    }
    if (scale != 1.0)
      for (int k = 0; k < f; ++k) zv[f + k] *= scale;
  }
  return z;
}

Matrix apply_activation(const Matrix& a, Activation act) {
  Matrix h = a;
  if (act == Activation::RELU)
    for (double& x : h.data) x = x > 0.0 ? x : 0.0;
  return h;
}

}  // namespace

ModelParams init_params(int f_in, const std::vector<int>& hidden_widths, uint64_t seed,
                        Activation activation, Aggregator aggregator) {
  if (f_in < 1) throw Error(ErrorCode::InvalidArgument, "input width must be at least 1");
  if (hidden_widths.empty()) throw Error(ErrorCode::InvalidDepth, "at least one layer required");
  for (int w : hidden_widths)
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "layer width must be at least 1");

  RngEngine rng(seed);
  ModelParams params;
  params.activation = activation;
  params.aggregator = aggregator;
  int prev = f_in;
  for (int width : hidden_widths) {
    LayerParams layer;
    layer.w = Matrix(2 * prev, width);
    const double a = std::sqrt(6.0 / static_cast<double>(2 * prev + width));
    for (double& x : layer.w.data) x = (2.0 * runif(rng) - 1.0) * a;
    params.layers.push_back(std::move(layer));
    prev = width;
  }
  return params;
}

Matrix layer_forward(const Matrix& h_prev, const PositionCoefficients& q,
                     const LayerParams& layer, Activation activation, Aggregator aggregator) {
  const int n = h_prev.rows;
  if (q.q.rows != n || q.q.cols != n)
    throw Error(ErrorCode::ShapeMismatch, "position matrix is not n x n");
  if (layer.w.rows != 2 * h_prev.cols)
    throw Error(ErrorCode::ShapeMismatch,
                "weight rows " + std::to_string(layer.w.rows) + " for input width " +
                    std::to_string(h_prev.cols));
  const Matrix z = aggregate(h_prev, q.q, row_sums(q.q), aggregator);
  return apply_activation(matmul(z, layer.w), activation);
}

EmbedTrace embed_forward(const Graph& g, const PositionCoefficients& q,
                         const ModelParams& params) {
  if (g.feat_dim() != params.input_dim())
    throw Error(ErrorCode::ShapeMismatch,
                "feature width " + std::to_string(g.feat_dim()) + " does not match model input " +
                    std::to_string(params.input_dim()));
  if (q.q.rows != g.n || q.q.cols != g.n)
    throw Error(ErrorCode::ShapeMismatch, "position matrix is not n x n");

  EmbedTrace trace;
  trace.q = q.q;
  trace.q_row_sums = row_sums(q.q);
  trace.h.push_back(g.features);
  for (const LayerParams& layer : params.layers) {
    const Matrix& h_prev = trace.h.back();
    Matrix z = aggregate(h_prev, trace.q, trace.q_row_sums, params.aggregator);
    Matrix a = matmul(z, layer.w);
    trace.h.push_back(apply_activation(a, params.activation));
    trace.z.push_back(std::move(z));
    trace.a.push_back(std::move(a));
  }
  return trace;
}

namespace {

// Reverse pass of one tower; accumulates dW per layer, returns nothing else.
void tower_backward(const ModelParams& params, const EmbedTrace& trace, Matrix dh,
                    std::vector<Matrix>& dw) {
  const int n = trace.q.rows;
  const double scale = agg_scale(params.aggregator, n);
  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const Matrix& a = trace.a[l];
    const Matrix& z = trace.z[l];
    const int f = trace.h[l].cols;

    Matrix da = dh;
    if (params.activation == Activation::RELU) {
      for (size_t i = 0; i < da.data.size(); ++i)
        if (a.data[i] <= 0.0) da.data[i] = 0.0;
    }

    {
      Matrix dwl = matmul_tn(z, da);
      Matrix& acc = dw[l];
      for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += dwl.data[i];
    }

    if (l == 0) break;  // gradients w.r.t. input features are not needed

    Matrix dz = matmul_nt(da, params.layers[l].w);  // n x 2f

    // Undo the aggregation: the left block feeds h_v scaled by the q row sum,
    // the right block feeds every anchor via q^T.
    Matrix dzr(n, f);
    Matrix dh_prev(n, f);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < n; ++v) {
      const double* dzv = dz.row(v);
      double* left = dh_prev.row(v);
      double* right = dzr.row(v);
      const double w = scale * trace.q_row_sums[v];
      for (int k = 0; k < f; ++k) {
        left[k] = w * dzv[k];
        right[k] = scale * dzv[f + k];
      }
    }
    Matrix via_anchors = matmul_tn(trace.q, dzr);
    for (size_t i = 0; i < dh_prev.data.size(); ++i) dh_prev.data[i] += via_anchors.data[i];
    dh = std::move(dh_prev);
  }
}

void check_trace(const ModelParams& params, const EmbedTrace& trace, const Matrix& dh,
                 const char* which) {
  if (trace.h.size() != params.layers.size() + 1 || trace.z.size() != params.layers.size() ||
      trace.a.size() != params.layers.size())
    throw Error(ErrorCode::StaleIntermediates, std::string(which) + " trace depth");
  if (!dh.same_shape(trace.h.back()))
    throw Error(ErrorCode::StaleIntermediates, std::string(which) + " gradient shape");
  for (size_t l = 0; l < params.layers.size(); ++l)
    if (trace.z[l].cols != params.layers[l].w.rows)
      throw Error(ErrorCode::StaleIntermediates, std::string(which) + " layer shape");
}

}  // namespace

GradientSet embed_backward(const ModelParams& params, const EmbedTrace& src,
                           const EmbedTrace& dst, const Matrix& dl_dhs, const Matrix& dl_dht) {
  check_trace(params, src, dl_dhs, "source");
  check_trace(params, dst, dl_dht, "target");

  GradientSet grads;
  grads.dw.reserve(params.layers.size());
  for (const LayerParams& layer : params.layers)
    grads.dw.emplace_back(layer.w.rows, layer.w.cols);

  tower_backward(params, src, dl_dhs, grads.dw);
  tower_backward(params, dst, dl_dht, grads.dw);
  return grads;
}

std::vector<double> flatten_params(const ModelParams& params) {
  std::vector<double> flat;
  for (const LayerParams& layer : params.layers)
    flat.insert(flat.end(), layer.w.data.begin(), layer.w.data.end());
  return flat;
}

void unflatten_params(ModelParams& params, const std::vector<double>& flat) {
  size_t offset = 0;
  for (LayerParams& layer : params.layers) {
    const size_t count = layer.w.data.size();
    if (offset + count > flat.size())
      throw Error(ErrorCode::ShapeMismatch, "flat vector shorter than parameter count");
    std::copy(flat.begin() + offset, flat.begin() + offset + count, layer.w.data.begin());
    offset += count;
  }
  if (offset != flat.size())
    throw Error(ErrorCode::ShapeMismatch, "flat vector longer than parameter count");
}

std::vector<double> flatten_grads(const GradientSet& grads) {
  std::vector<double> flat;
  for (const Matrix& g : grads.dw) flat.insert(flat.end(), g.data.begin(), g.data.end());
  return flat;
}

}  // namespace gmatch
