#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmatch/embed.hpp"
#include "gmatch/pipeline.hpp"
#include "gmatch/synth.hpp"

namespace gmatch {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 8;
  int max_steps = 2000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int sinkhorn_iters = 50;
  double temperature = 1.0;
  int r = 3;
  std::vector<int> hidden_widths = {64, 64};
  uint64_t seed = 0;
  Activation activation = Activation::RELU;
  Aggregator aggregator = Aggregator::SUM;
  PositionMode position_mode = PositionMode::POSITION;

  MatchSettings match_settings() const {
    return MatchSettings{r, sinkhorn_iters, temperature, position_mode};
  }
};

struct OptimizerState {
  std::vector<Matrix> m;  // first moments, congruent with ModelParams
  std::vector<Matrix> v;  // second moments
  int64_t step = 0;
};

struct StepReport {
  int step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Everything needed to resume training exactly: parameters, optimizer
// moments, the shuffle engine state and the position inside the current
// epoch's order.
struct Checkpoint {
  TrainConfig config;
  std::vector<std::pair<int, int>> layer_shapes;
  std::vector<double> params;
  OptimizerState opt;
  std::string rng_state;
  std::vector<int> epoch_order;
  int64_t epoch_cursor = 0;
};

// Canonical Adam update with bias correction.
void adam_step(ModelParams& params, const GradientSet& grads, OptimizerState& state,
               const TrainConfig& cfg);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepReport> reports;
};

TrainResult train(const Dataset& ds, const TrainConfig& cfg);
// Continues from a checkpoint until max_steps total optimizer steps.
TrainResult train_resume(const Dataset& ds, const Checkpoint& ckpt, int max_steps);

struct EvalResult {
  double mean_accuracy = 0.0;
  std::map<std::string, double> per_category;
  std::map<std::string, int> category_counts;
};

EvalResult evaluate(const Dataset& ds, const Checkpoint& ckpt);

ModelParams params_from_checkpoint(const Checkpoint& ckpt);

struct CrossCategoryResult {
  std::vector<std::string> labels;
  Matrix accuracy;  // rows: training category, cols: test category
};

struct CategoryData {
  std::string label;
  Dataset train;
  Dataset test;
};

CrossCategoryResult cross_category(const std::vector<CategoryData>& categories,
                                   const TrainConfig& cfg);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void write_reports_csv(const std::vector<StepReport>& reports, const std::string& path);
void write_eval_csv(const EvalResult& result, const std::string& path);
void write_cross_category_csv(const CrossCategoryResult& result, const std::string& path);

}  // namespace gmatch
