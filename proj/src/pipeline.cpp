#include "gmatch/pipeline.hpp"

#include <cmath>
#include <string>

#include "gmatch/error.hpp"

namespace gmatch {

PositionCoefficients position_matrix(const Graph& g, const MatchSettings& settings) {
  if (settings.position_mode == PositionMode::UNIFORM) {
    PositionCoefficients q;
    q.q = Matrix(g.n, g.n, 1.0 / static_cast<double>(g.n));
    return q;
  }
  return position_coefficients(bfs_distances(g, settings.r));
}

PairTrace pair_forward(const GraphPair& pair, const PositionCoefficients& qs,
                       const PositionCoefficients& qt, const ModelParams& params,
                       const MatchSettings& settings) {
  PairTrace trace;
  trace.src = embed_forward(pair.source, qs, params);
  trace.dst = embed_forward(pair.target, qt, params);
  const Matrix scores =
      score_matrix(Embeddings{trace.src.embeddings()}, Embeddings{trace.dst.embeddings()});
  trace.soft = sinkhorn_traced(scores, settings.sinkhorn_iters, settings.temperature,
                               trace.sinkhorn);
  LossAndGrad lg = permutation_loss(trace.soft, pair.gt);
  trace.loss = lg.loss;
  trace.dl_ds = std::move(lg.dl_ds);
  return trace;
}

PairTrace pair_forward(const GraphPair& pair, const ModelParams& params,
                       const MatchSettings& settings) {
  return pair_forward(pair, position_matrix(pair.source, settings),
                      position_matrix(pair.target, settings), params, settings);
}

GradientSet pair_backward(const ModelParams& params, const PairTrace& trace) {
  const Matrix dscores = sinkhorn_backward(trace.sinkhorn, trace.dl_ds);
  // scores = H_s H_t^T, so dH_s = dScores H_t and dH_t = dScores^T H_s.
  const Matrix dl_dhs = matmul(dscores, trace.dst.embeddings());
  const Matrix dl_dht = matmul_tn(dscores, trace.src.embeddings());
  GradientSet grads = embed_backward(params, trace.src, trace.dst, dl_dhs, dl_dht);
  grads.loss = trace.loss;
  return grads;
}

PermutationMatrix predict_mapping(const GraphPair& pair, const ModelParams& params,
                                  const MatchSettings& settings) {
  const EmbedTrace src = embed_forward(pair.source, position_matrix(pair.source, settings), params);
  const EmbedTrace dst = embed_forward(pair.target, position_matrix(pair.target, settings), params);
  const Matrix scores =
      score_matrix(Embeddings{src.embeddings()}, Embeddings{dst.embeddings()});
  return hungarian_decode(sinkhorn(scores, settings.sinkhorn_iters, settings.temperature));
}

GradCheckReport compare_gradients(const std::vector<double>& analytic,
                                  const std::vector<double>& numeric, double rel_tol,
                                  double abs_tol) {
  if (analytic.size() != numeric.size())
    throw Error(ErrorCode::ShapeMismatch, "gradient vectors have different lengths");
  // Entries below abs_tol / rel_tol in both vectors are compared against the
  // floor abs_tol / rel_tol instead of their own magnitude, which makes the
  // relative criterion equivalent to |a - b| <= abs_tol there.
  const double floor = abs_tol / rel_tol;
  GradCheckReport report;
  report.entries = static_cast<int>(analytic.size());
  for (size_t k = 0; k < analytic.size(); ++k) {
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric[k]), floor});
    report.max_rel_err = std::max(report.max_rel_err, std::abs(analytic[k] - numeric[k]) / denom);
  }
  report.pass = report.max_rel_err <= rel_tol;
  return report;
}

GradCheckReport grad_check(const GraphPair& pair, const ModelParams& params,
                           const MatchSettings& settings, double h, double rel_tol,
                           double abs_tol) {
  const PositionCoefficients qs = position_matrix(pair.source, settings);
  const PositionCoefficients qt = position_matrix(pair.target, settings);

  const PairTrace nominal = pair_forward(pair, qs, qt, params, settings);
  for (const EmbedTrace* tower : {&nominal.src, &nominal.dst})
    for (const Matrix& a : tower->a)
      for (double x : a.data)
        if (std::abs(x) < 1e-3)
          throw Error(ErrorCode::KinkProximity,
                      "pre-activation magnitude " + std::to_string(std::abs(x)) +
                          " is inside the 1e-3 guard band");

  const std::vector<double> analytic = flatten_grads(pair_backward(params, nominal));
  const std::vector<double> theta = flatten_params(params);
  std::vector<double> numeric(theta.size());

#pragma omp parallel for schedule(static)
  for (long k = 0; k < static_cast<long>(theta.size()); ++k) {
    ModelParams local = params;
    std::vector<double> shifted = theta;
    shifted[k] = theta[k] + h;
    unflatten_params(local, shifted);
    const double up = pair_forward(pair, qs, qt, local, settings).loss;
    shifted[k] = theta[k] - h;
    unflatten_params(local, shifted);
    const double down = pair_forward(pair, qs, qt, local, settings).loss;
    numeric[k] = (up - down) / (2.0 * h);
  }

  return compare_gradients(analytic, numeric, rel_tol, abs_tol);
}

}  // namespace gmatch
