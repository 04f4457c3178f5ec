#pragma once

#include "gmatch/assignment.hpp"
#include "gmatch/embed.hpp"
#include "gmatch/graph.hpp"
#include "gmatch/synth.hpp"

namespace gmatch {

// Uniform mode replaces every position matrix with the constant 1/n matrix;
// used by the ablation harness.
enum class PositionMode { POSITION, UNIFORM };

struct MatchSettings {
  int r = 3;
  int sinkhorn_iters = 50;
  double temperature = 1.0;
  PositionMode position_mode = PositionMode::POSITION;
};

PositionCoefficients position_matrix(const Graph& g, const MatchSettings& settings);

// Full differentiable path for one pair: embeddings for both graphs, inner
// product scores, Sinkhorn, permutation loss.
struct PairTrace {
  EmbedTrace src;
  EmbedTrace dst;
  SinkhornTrace sinkhorn;
  SoftAssignment soft;
  double loss = 0.0;
  Matrix dl_ds;
};

PairTrace pair_forward(const GraphPair& pair, const ModelParams& params,
                       const MatchSettings& settings);
PairTrace pair_forward(const GraphPair& pair, const PositionCoefficients& qs,
                       const PositionCoefficients& qt, const ModelParams& params,
                       const MatchSettings& settings);

GradientSet pair_backward(const ModelParams& params, const PairTrace& trace);

// Forward without the loss tail: embeddings, scores, Sinkhorn, Hungarian.
PermutationMatrix predict_mapping(const GraphPair& pair, const ModelParams& params,
                                  const MatchSettings& settings);

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  int entries = 0;
};

// Central-difference check of the analytic weight gradients through the whole
// loss. Entries whose magnitude stays below abs_tol/rel_tol are held to the
// absolute tolerance instead of the relative one. Throws KinkProximity when
// any pre-activation magnitude is below 1e-3 at the nominal point.
GradCheckReport grad_check(const GraphPair& pair, const ModelParams& params,
                           const MatchSettings& settings, double h = 1e-5, double rel_tol = 1e-4,
                           double abs_tol = 1e-7);

// The comparison rule of grad_check, exposed for negative controls.
GradCheckReport compare_gradients(const std::vector<double>& analytic,
                                  const std::vector<double>& numeric, double rel_tol,
                                  double abs_tol);

}  // namespace gmatch
