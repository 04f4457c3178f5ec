#include "gmatch/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gmatch/error.hpp"
#include "gmatch/rng.hpp"

namespace gmatch {

namespace {

using nlohmann::json;

void check_train_config(const TrainConfig& cfg) {
  if (!(cfg.lr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be non-negative");
  if (cfg.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be at least 1");
  if (cfg.max_steps < 0) throw Error(ErrorCode::InvalidArgument, "max_steps must be non-negative");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0))
    throw Error(ErrorCode::InvalidArgument, "adam betas must lie in [0, 1)");
  if (!(cfg.adam_eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "adam_eps must be positive");
}

int dataset_feat_dim(const Dataset& ds) {
  if (ds.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no pairs");
  const int dim = ds.pairs.front().source.feat_dim();
  for (const GraphPair& pair : ds.pairs)
    if (pair.source.feat_dim() != dim || pair.target.feat_dim() != dim)
      throw Error(ErrorCode::WidthMismatch, "pairs disagree on feature width");
  return dim;
}

struct PositionCache {
  std::vector<PositionCoefficients> qs, qt;
};

PositionCache cache_positions(const Dataset& ds, const MatchSettings& settings) {
  PositionCache cache;
  const int count = ds.size();
  cache.qs.resize(count);
  cache.qt.resize(count);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) {
    cache.qs[i] = position_matrix(ds.pairs[i].source, settings);
    cache.qt[i] = position_matrix(ds.pairs[i].target, settings);
  }
  return cache;
}

Checkpoint make_checkpoint(const TrainConfig& cfg, const ModelParams& params,
                           OptimizerState opt, const RngEngine& rng,
                           std::vector<int> epoch_order, int64_t epoch_cursor) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  for (const LayerParams& layer : params.layers)
    ckpt.layer_shapes.emplace_back(layer.w.rows, layer.w.cols);
  ckpt.params = flatten_params(params);
  ckpt.opt = std::move(opt);
  ckpt.rng_state = rng_state_to_string(rng);
  ckpt.epoch_order = std::move(epoch_order);
  ckpt.epoch_cursor = epoch_cursor;
  return ckpt;
}

TrainResult train_loop(const Dataset& ds, const TrainConfig& cfg, ModelParams params,
                       OptimizerState opt, RngEngine rng, std::vector<int> order,
                       int64_t cursor, int max_steps) {
  const MatchSettings settings = cfg.match_settings();
  const PositionCache cache = cache_positions(ds, settings);
  const int count = ds.size();

  TrainResult result;
  while (opt.step < max_steps) {
    if (cursor >= static_cast<int64_t>(order.size())) {
      order.resize(count);
      for (int i = 0; i < count; ++i) order[i] = i;
      for (int i = count - 1; i >= 1; --i) {
        const int j = std::uniform_int_distribution<int>(0, i)(rng);
        std::swap(order[i], order[j]);
      }
      cursor = 0;
    }
    const int take = std::min<int64_t>(cfg.batch_size, static_cast<int64_t>(order.size()) - cursor);
    std::vector<GradientSet> grads(take);
    std::vector<double> accs(take);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < take; ++b) {
      const int idx = order[cursor + b];
      const GraphPair& pair = ds.pairs[idx];
      const PairTrace trace =
          pair_forward(pair, cache.qs[idx], cache.qt[idx], params, settings);
      grads[b] = pair_backward(params, trace);
      accs[b] = matching_accuracy(hungarian_decode(trace.soft), pair.gt);
    }
    cursor += take;

    // Serial reduction in batch order keeps the result independent of the
    // thread count.
    GradientSet mean;
    for (const LayerParams& layer : params.layers) mean.dw.emplace_back(layer.w.rows, layer.w.cols);
    double acc_total = 0.0;
    for (int b = 0; b < take; ++b) {
      for (size_t l = 0; l < mean.dw.size(); ++l)
        for (size_t e = 0; e < mean.dw[l].data.size(); ++e)
          mean.dw[l].data[e] += grads[b].dw[l].data[e];
      mean.loss += grads[b].loss;
      acc_total += accs[b];
    }
    const double inv = 1.0 / static_cast<double>(take);
    for (Matrix& g : mean.dw)
      for (double& x : g.data) x *= inv;
    mean.loss *= inv;

    adam_step(params, mean, opt, cfg);
    result.reports.push_back(
        StepReport{static_cast<int>(opt.step), mean.loss, acc_total * inv});
  }

  result.checkpoint =
      make_checkpoint(cfg, params, std::move(opt), rng, std::move(order), cursor);
  return result;
}

}  // namespace

void adam_step(ModelParams& params, const GradientSet& grads, OptimizerState& state,
               const TrainConfig& cfg) {
  check_train_config(cfg);
  if (grads.dw.size() != params.layers.size())
    throw Error(ErrorCode::ShapeMismatch, "gradient layer count mismatch");
  for (size_t l = 0; l < grads.dw.size(); ++l)
    if (!grads.dw[l].same_shape(params.layers[l].w))
      throw Error(ErrorCode::ShapeMismatch, "gradient shape mismatch at layer " +
                                                std::to_string(l));
  if (state.m.empty()) {
    for (const LayerParams& layer : params.layers) {
      state.m.emplace_back(layer.w.rows, layer.w.cols);
      state.v.emplace_back(layer.w.rows, layer.w.cols);
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (size_t l = 0; l < params.layers.size(); ++l) {
    double* w = params.layers[l].w.data.data();
    double* m = state.m[l].data.data();
    double* v = state.v[l].data.data();
    const double* g = grads.dw[l].data.data();
    const size_t count = params.layers[l].w.data.size();
    for (size_t e = 0; e < count; ++e) {
      m[e] = cfg.adam_beta1 * m[e] + (1.0 - cfg.adam_beta1) * g[e];
      v[e] = cfg.adam_beta2 * v[e] + (1.0 - cfg.adam_beta2) * g[e] * g[e];
      const double mh = m[e] / bc1;
      const double vh = v[e] / bc2;
      w[e] -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
    }
  }
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  check_train_config(cfg);
  const int feat_dim = dataset_feat_dim(ds);
  ModelParams params =
      init_params(feat_dim, cfg.hidden_widths, cfg.seed, cfg.activation, cfg.aggregator);
  return train_loop(ds, cfg, std::move(params), OptimizerState{}, RngEngine(cfg.seed), {}, 0,
                    cfg.max_steps);
}

TrainResult train_resume(const Dataset& ds, const Checkpoint& ckpt, int max_steps) {
  TrainConfig cfg = ckpt.config;
  cfg.max_steps = max_steps;
  check_train_config(cfg);
  const int feat_dim = dataset_feat_dim(ds);
  ModelParams params = params_from_checkpoint(ckpt);
  if (params.input_dim() != feat_dim)
    throw Error(ErrorCode::WidthMismatch, "dataset feature width does not match checkpoint");
  if (!ckpt.epoch_order.empty() && static_cast<int>(ckpt.epoch_order.size()) != ds.size())
    throw Error(ErrorCode::IndexMismatch, "epoch order does not index this dataset");
  for (int idx : ckpt.epoch_order)
    if (idx < 0 || idx >= ds.size())
      throw Error(ErrorCode::IndexMismatch, "epoch order entry out of range");
  return train_loop(ds, cfg, std::move(params), ckpt.opt,
                    rng_state_from_string(ckpt.rng_state), ckpt.epoch_order, ckpt.epoch_cursor,
                    max_steps);
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams params;
  params.activation = ckpt.config.activation;
  params.aggregator = ckpt.config.aggregator;
  for (const auto& [rows, cols] : ckpt.layer_shapes) {
    LayerParams layer;
    layer.w = Matrix(rows, cols);
    params.layers.push_back(std::move(layer));
  }
  if (params.layers.empty()) throw Error(ErrorCode::InvalidDepth, "checkpoint has no layers");
  unflatten_params(params, ckpt.params);
  return params;
}

EvalResult evaluate(const Dataset& ds, const Checkpoint& ckpt) {
  if (ds.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no pairs");
  const ModelParams params = params_from_checkpoint(ckpt);
  const int feat_dim = dataset_feat_dim(ds);
  if (params.input_dim() != feat_dim)
    throw Error(ErrorCode::WidthMismatch, "dataset feature width does not match checkpoint");
  const MatchSettings settings = ckpt.config.match_settings();

  const int count = ds.size();
  std::vector<double> accs(count);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i)
    accs[i] = matching_accuracy(predict_mapping(ds.pairs[i], params, settings), ds.pairs[i].gt);

  EvalResult result;
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    total += accs[i];
    result.per_category[ds.pairs[i].category] += accs[i];
    result.category_counts[ds.pairs[i].category] += 1;
  }
  result.mean_accuracy = total / count;
  for (auto& [label, sum] : result.per_category) sum /= result.category_counts[label];
  return result;
}

CrossCategoryResult cross_category(const std::vector<CategoryData>& categories,
                                   const TrainConfig& cfg) {
  if (categories.empty()) throw Error(ErrorCode::InvalidArgument, "no categories");
  const int k = static_cast<int>(categories.size());
  CrossCategoryResult result;
  result.accuracy = Matrix(k, k);
  for (const CategoryData& c : categories) result.labels.push_back(c.label);
  for (int c = 0; c < k; ++c) {
    const TrainResult trained = train(categories[c].train, cfg);
    for (int d = 0; d < k; ++d)
      result.accuracy(c, d) = evaluate(categories[d].test, trained.checkpoint).mean_accuracy;
  }
  return result;
}

namespace {

std::string activation_name(Activation) { return "relu"; }

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::RELU;
  throw Error(ErrorCode::FormatError, "unknown activation " + s);
}

std::string aggregator_name(Aggregator a) { return a == Aggregator::MEAN ? "mean" : "sum"; }

Aggregator aggregator_from(const std::string& s) {
  if (s == "sum") return Aggregator::SUM;
  if (s == "mean") return Aggregator::MEAN;
  throw Error(ErrorCode::FormatError, "unknown aggregator " + s);
}

std::string position_mode_name(PositionMode p) {
  return p == PositionMode::UNIFORM ? "uniform" : "position";
}

PositionMode position_mode_from(const std::string& s) {
  if (s == "position") return PositionMode::POSITION;
  if (s == "uniform") return PositionMode::UNIFORM;
  throw Error(ErrorCode::FormatError, "unknown position mode " + s);
}

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["max_steps"] = cfg.max_steps;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["sinkhorn_iters"] = cfg.sinkhorn_iters;
  j["temperature"] = cfg.temperature;
  j["r"] = cfg.r;
  j["hidden_widths"] = cfg.hidden_widths;
  j["seed"] = cfg.seed;
  j["activation"] = activation_name(cfg.activation);
  j["aggregator"] = aggregator_name(cfg.aggregator);
  j["position_mode"] = position_mode_name(cfg.position_mode);
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.lr = j.at("lr").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.max_steps = j.at("max_steps").get<int>();
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.adam_eps = j.at("adam_eps").get<double>();
  cfg.sinkhorn_iters = j.at("sinkhorn_iters").get<int>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.r = j.at("r").get<int>();
  cfg.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.activation = activation_from(j.at("activation").get<std::string>());
  cfg.aggregator = aggregator_from(j.at("aggregator").get<std::string>());
  cfg.position_mode = position_mode_from(j.at("position_mode").get<std::string>());
  return cfg;
}

json moments_to_json(const std::vector<Matrix>& ms) {
  json arr = json::array();
  for (const Matrix& m : ms) arr.push_back(m.data);
  return arr;
}

std::vector<Matrix> moments_from_json(const json& arr,
                                      const std::vector<std::pair<int, int>>& shapes) {
  if (arr.size() != shapes.size())
    throw Error(ErrorCode::ShapeMismatch, "moment layer count mismatch");
  std::vector<Matrix> ms;
  for (size_t l = 0; l < shapes.size(); ++l) {
    Matrix m(shapes[l].first, shapes[l].second);
    const auto values = arr.at(l).get<std::vector<double>>();
    if (values.size() != m.data.size())
      throw Error(ErrorCode::ShapeMismatch, "moment size mismatch at layer " + std::to_string(l));
    m.data = values;
    ms.push_back(std::move(m));
  }
  return ms;
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["config"] = config_to_json(ckpt.config);
  json shapes = json::array();
  for (const auto& [rows, cols] : ckpt.layer_shapes) shapes.push_back(json::array({rows, cols}));
  j["layer_shapes"] = std::move(shapes);
  j["params"] = ckpt.params;
  j["opt"]["m"] = moments_to_json(ckpt.opt.m);
  j["opt"]["v"] = moments_to_json(ckpt.opt.v);
  j["opt"]["step"] = ckpt.opt.step;
  j["rng_state"] = ckpt.rng_state;
  j["epoch_order"] = ckpt.epoch_order;
  j["epoch_cursor"] = ckpt.epoch_cursor;

  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("checkpoint parse: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != 1)
      throw Error(ErrorCode::VersionMismatch, "checkpoint format_version " +
                                                  std::to_string(version));
    Checkpoint ckpt;
    ckpt.config = config_from_json(j.at("config"));
    for (const json& shape : j.at("layer_shapes"))
      ckpt.layer_shapes.emplace_back(shape.at(0).get<int>(), shape.at(1).get<int>());
    ckpt.params = j.at("params").get<std::vector<double>>();
    size_t expected = 0;
    for (const auto& [rows, cols] : ckpt.layer_shapes)
      expected += static_cast<size_t>(rows) * cols;
    if (ckpt.params.size() != expected)
      throw Error(ErrorCode::ShapeMismatch, "parameter count does not match layer shapes");
    if (!j.at("opt").at("m").empty() || !j.at("opt").at("v").empty()) {
      ckpt.opt.m = moments_from_json(j.at("opt").at("m"), ckpt.layer_shapes);
      ckpt.opt.v = moments_from_json(j.at("opt").at("v"), ckpt.layer_shapes);
    }
    ckpt.opt.step = j.at("opt").at("step").get<int64_t>();
    ckpt.rng_state = j.at("rng_state").get<std::string>();
    ckpt.epoch_order = j.at("epoch_order").get<std::vector<int>>();
    ckpt.epoch_cursor = j.at("epoch_cursor").get<int64_t>();
    return ckpt;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("checkpoint fields: ") + e.what());
  }
}

void write_reports_csv(const std::vector<StepReport>& reports, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  os << "step,loss,accuracy\n";
  for (const StepReport& r : reports)
    os << r.step << ',' << fmt_double(r.loss) << ',' << fmt_double(r.accuracy) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

void write_eval_csv(const EvalResult& result, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  os << "category,count,accuracy\n";
  int total = 0;
  for (const auto& [label, acc] : result.per_category) {
    const int count = result.category_counts.at(label);
    total += count;
    os << label << ',' << count << ',' << fmt_double(acc) << '\n';
  }
  os << "all," << total << ',' << fmt_double(result.mean_accuracy) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

void write_cross_category_csv(const CrossCategoryResult& result, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  os << "train_category";
  for (const std::string& label : result.labels) os << ',' << label;
  os << '\n';
  for (size_t c = 0; c < result.labels.size(); ++c) {
    os << result.labels[c];
    for (size_t d = 0; d < result.labels.size(); ++d)
      os << ',' << fmt_double(result.accuracy(static_cast<int>(c), static_cast<int>(d)));
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

}  // namespace gmatch
