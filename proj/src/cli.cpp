#include "gmatch/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmatch/error.hpp"
#include "gmatch/parallel.hpp"
#include "gmatch/pipeline.hpp"
#include "gmatch/synth.hpp"
#include "gmatch/trainer.hpp"

namespace gmatch {

namespace {

// CLI11 config adapter for JSON files: top-level keys are app options,
// nested objects hold options of the subcommand they are named after.
// Command-line flags always win over config values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::FormatError, "config: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const nlohmann::json& v = it.value();
      if (v.is_object()) {
        std::vector<std::string> nested = parents;
        nested.push_back(it.key());
        collect(v, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (v.is_array())
        for (const nlohmann::json& e : v) item.inputs.push_back(scalar(e));
      else
        item.inputs.push_back(scalar(v));
      items.push_back(std::move(item));
    }
  }
};

struct TrainCliOpts {
  TrainConfig cfg;
  bool uniform_q = false;
  bool mean_agg = false;

  TrainConfig resolved() const {
    TrainConfig out = cfg;
    if (uniform_q) out.position_mode = PositionMode::UNIFORM;
    if (mean_agg) out.aggregator = Aggregator::MEAN;
    return out;
  }
};

void add_train_options(CLI::App* cmd, TrainCliOpts& o) {
  cmd->add_option("--steps", o.cfg.max_steps, "total optimizer steps")->capture_default_str();
  cmd->add_option("--batch", o.cfg.batch_size, "pairs per optimizer step")->capture_default_str();
  cmd->add_option("--lr", o.cfg.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--seed", o.cfg.seed, "init and shuffle seed")->capture_default_str();
  cmd->add_option("--widths", o.cfg.hidden_widths, "layer output widths")->capture_default_str();
  cmd->add_option("--sinkhorn-iters", o.cfg.sinkhorn_iters, "normalization iterations")
      ->capture_default_str();
  cmd->add_option("--temperature", o.cfg.temperature, "score temperature")->capture_default_str();
  cmd->add_option("--r", o.cfg.r, "BFS distance cap")->capture_default_str();
  cmd->add_flag("--uniform-q", o.uniform_q, "replace position weights with 1/n (ablation)");
  cmd->add_flag("--mean-agg", o.mean_agg, "aggregate neighbors by mean instead of sum");
}

struct GenDataOpts {
  std::string out;
  int pairs = 20;
  int categories = 0;
  int n = 10;
  int m = 0;
  std::string edge_model = "er";
  double er_p = 0.3;
  double geo_radius = 0.4;
  int feat_dim = 16;
  double sigma = 0.0;
  double flip_prob = 0.0;
  std::string category;
  uint64_t seed = 0;
  int ambiguous_n = 0;
};

int run_gen_data(const GenDataOpts& o) {
  Dataset ds;
  if (o.ambiguous_n > 0) {
    for (int i = 0; i < o.pairs; ++i)
      ds.pairs.push_back(gen_ambiguous_pair(o.ambiguous_n, o.seed + static_cast<uint64_t>(i)));
  } else if (o.categories > 0) {
    ds = gen_category_dataset(default_category_specs(o.categories, o.feat_dim), o.pairs, o.seed);
  } else {
    if (o.pairs < 1) throw Error(ErrorCode::InvalidArgument, "--pairs must be positive");
    PairGenConfig pc;
    pc.n = o.n;
    pc.m = o.m > 0 ? o.m : o.n;
    pc.edge_model = o.edge_model == "geo" ? EdgeModel::RANDOM_GEOMETRIC : EdgeModel::ERDOS_RENYI;
    pc.er_p = o.er_p;
    pc.geo_radius = o.geo_radius;
    pc.feat_dim = o.feat_dim;
    pc.feature_noise_sigma = o.sigma;
    pc.edge_flip_prob = o.flip_prob;
    const std::string label = o.category.empty() ? o.edge_model : o.category;
    for (int s = 0; s < o.pairs; ++s) {
      pc.seed = o.seed + static_cast<uint64_t>(s);
      GraphPair pair = gen_pair(pc);
      pair.category = label;
      ds.pairs.push_back(std::move(pair));
    }
  }
  save_dataset(ds, o.out);
  std::cout << "wrote " << ds.size() << " pairs to " << o.out << '\n';
  return 0;
}

struct TrainOpts {
  std::string data;
  std::string out;
  std::string resume;
  std::string reports;
  TrainCliOpts train;
};

int run_train(const TrainOpts& o) {
  const Dataset ds = load_dataset(o.data);
  const TrainConfig cfg = o.train.resolved();
  TrainResult result;
  if (o.resume.empty())
    result = train(ds, cfg);
  else
    result = train_resume(ds, load_checkpoint(o.resume), cfg.max_steps);
  save_checkpoint(result.checkpoint, o.out);
  if (!o.reports.empty()) write_reports_csv(result.reports, o.reports);
  std::cout << "trained to step " << result.checkpoint.opt.step << ", checkpoint " << o.out
            << '\n';
  if (!result.reports.empty()) {
    const StepReport& last = result.reports.back();
    std::cout << "final batch loss " << last.loss << ", batch accuracy " << last.accuracy << '\n';
  }
  return 0;
}

struct EvalOpts {
  std::string data;
  std::string ckpt;
  std::string csv;
};

int run_eval(const EvalOpts& o) {
  const Dataset ds = load_dataset(o.data);
  const EvalResult result = evaluate(ds, load_checkpoint(o.ckpt));
  std::cout << "pairs " << ds.size() << '\n';
  for (const auto& [label, acc] : result.per_category)
    std::cout << "category " << label << " count " << result.category_counts.at(label)
              << " accuracy " << acc << '\n';
  std::cout << "mean_accuracy " << result.mean_accuracy << '\n';
  if (!o.csv.empty()) write_eval_csv(result, o.csv);
  return 0;
}

struct MatchOpts {
  std::string data;
  std::string ckpt;
  int index = 0;
};

int run_match(const MatchOpts& o) {
  const Dataset ds = load_dataset(o.data);
  if (o.index < 0 || o.index >= ds.size())
    throw Error(ErrorCode::InvalidArgument, "pair index out of range");
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const GraphPair& pair = ds.pairs[o.index];
  const PermutationMatrix pred = predict_mapping(pair, params_from_checkpoint(ckpt),
                                                 ckpt.config.match_settings());
  nlohmann::json out;
  out["index"] = o.index;
  out["category"] = pair.category;
  out["mapping"] = pred.mapping;
  out["accuracy"] = matching_accuracy(pred, pair.gt);
  std::cout << out.dump() << '\n';
  return 0;
}

struct GradCheckOpts {
  int instances = 20;
  int n = 6;
  int m = 6;
  int feat_dim = 4;
  std::vector<int> widths = {8, 8};
  uint64_t seed = 0;
  int r = 3;
  int sinkhorn_iters = 20;
  double temperature = 1.0;
  double h = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-7;
};

int run_grad_check(const GradCheckOpts& o) {
  MatchSettings settings;
  settings.r = o.r;
  settings.sinkhorn_iters = o.sinkhorn_iters;
  settings.temperature = o.temperature;

  int done = 0;
  int attempts = 0;
  uint64_t seed = o.seed;
  double worst = 0.0;
  bool all_pass = true;
  while (done < o.instances) {
    if (++attempts > 50 * o.instances)
      throw Error(ErrorCode::KinkProximity, "could not find enough kink-free instances");
    PairGenConfig pc;
    pc.n = o.n;
    pc.m = o.m;
    pc.feat_dim = o.feat_dim;
    pc.seed = seed++;
    const GraphPair pair = gen_pair(pc);
    const ModelParams params = init_params(o.feat_dim, o.widths, pc.seed);
    GradCheckReport report;
    try {
      report = grad_check(pair, params, settings, o.h, o.rel_tol, o.abs_tol);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::KinkProximity) {
        std::cout << "seed " << pc.seed << " skipped (near a kink)\n";
        continue;
      }
      throw;
    }
    ++done;
    worst = std::max(worst, report.max_rel_err);
    all_pass = all_pass && report.pass;
    std::cout << "instance " << done << " seed " << pc.seed << " max_rel_err "
              << report.max_rel_err << (report.pass ? " ok" : " FAIL") << '\n';
  }
  std::cout << "gradcheck " << (all_pass ? "pass" : "fail") << ", worst max_rel_err " << worst
            << " over " << done << " instances\n";
  return all_pass ? 0 : 1;
}

struct XcatOpts {
  std::string out;
  int categories = 3;
  int train_pairs = 20;
  int test_pairs = 10;
  int feat_dim = 16;
  uint64_t seed = 0;
  TrainCliOpts train;
};

int run_xcat(const XcatOpts& o) {
  const std::vector<CategorySpec> specs = default_category_specs(o.categories, o.feat_dim);
  std::vector<CategoryData> data;
  for (size_t k = 0; k < specs.size(); ++k) {
    CategoryData cd;
    cd.label = specs[k].label;
    cd.train = gen_category_dataset({specs[k]}, o.train_pairs, o.seed + k);
    cd.test = gen_category_dataset({specs[k]}, o.test_pairs, o.seed + 1000003 + k);
    data.push_back(std::move(cd));
  }
  const CrossCategoryResult result = cross_category(data, o.train.resolved());
  write_cross_category_csv(result, o.out);
  std::cout << "train\\test";
  for (const std::string& label : result.labels) std::cout << ' ' << label;
  std::cout << '\n';
  for (size_t c = 0; c < result.labels.size(); ++c) {
    std::cout << result.labels[c];
    for (size_t d = 0; d < result.labels.size(); ++d)
      std::cout << ' ' << result.accuracy(static_cast<int>(c), static_cast<int>(d));
    std::cout << '\n';
  }
  std::cout << "wrote " << o.out << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"position-aware graph matching toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON file with option defaults; flags take precedence");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.allow_config_extras(false);

  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 keeps the OpenMP default)")
      ->check(CLI::NonNegativeNumber);

  GenDataOpts gen_opts;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic pair dataset");
  gen->add_option("--out", gen_opts.out, "output JSONL path")->required();
  gen->add_option("--pairs", gen_opts.pairs, "pair count (per category in --categories mode)")
      ->capture_default_str();
  gen->add_option("--n", gen_opts.n, "source size")->capture_default_str();
  gen->add_option("--m", gen_opts.m, "target size (0 means equal to --n)")->capture_default_str();
  gen->add_option("--edge-model", gen_opts.edge_model, "random graph family")
      ->check(CLI::IsMember({"er", "geo"}))
      ->capture_default_str();
  gen->add_option("--er-p", gen_opts.er_p, "edge probability for er")->capture_default_str();
  gen->add_option("--geo-radius", gen_opts.geo_radius, "connection radius for geo")
      ->capture_default_str();
  gen->add_option("--feat-dim", gen_opts.feat_dim, "feature width")->capture_default_str();
  gen->add_option("--sigma", gen_opts.sigma, "target feature noise")->capture_default_str();
  gen->add_option("--flip-prob", gen_opts.flip_prob, "target edge flip probability")
      ->capture_default_str();
  gen->add_option("--category", gen_opts.category, "label stored with each pair")
      ->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "generation seed")->capture_default_str();
  gen->add_option("--categories", gen_opts.categories,
                  "use this many built-in category families instead of the flags above")
      ->capture_default_str();
  gen->add_option("--ambiguous-n", gen_opts.ambiguous_n,
                  "generate the ambiguous family of this size instead (even, >= 6)")
      ->capture_default_str();

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train a matching model");
  train_cmd->add_option("--data", train_opts.data, "training dataset JSONL")->required();
  train_cmd->add_option("--out", train_opts.out, "checkpoint output path")->required();
  train_cmd->add_option("--resume", train_opts.resume,
                        "checkpoint to continue from; only --steps applies then");
  train_cmd->add_option("--reports", train_opts.reports, "per-step CSV output path");
  add_train_options(train_cmd, train_opts.train);

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--data", eval_opts.data, "dataset JSONL")->required();
  eval_cmd->add_option("--ckpt", eval_opts.ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--csv", eval_opts.csv, "per-category CSV output path");

  MatchOpts match_opts;
  CLI::App* match_cmd = app.add_subcommand("match", "print the predicted mapping of one pair");
  match_cmd->add_option("--data", match_opts.data, "dataset JSONL")->required();
  match_cmd->add_option("--ckpt", match_opts.ckpt, "checkpoint path")->required();
  match_cmd->add_option("--index", match_opts.index, "pair index")->capture_default_str();

  GradCheckOpts grad_opts;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  grad_cmd->add_option("--instances", grad_opts.instances, "instances to check")
      ->capture_default_str();
  grad_cmd->add_option("--n", grad_opts.n, "source size")->capture_default_str();
  grad_cmd->add_option("--m", grad_opts.m, "target size")->capture_default_str();
  grad_cmd->add_option("--feat-dim", grad_opts.feat_dim, "feature width")->capture_default_str();
  grad_cmd->add_option("--widths", grad_opts.widths, "layer output widths")->capture_default_str();
  grad_cmd->add_option("--seed", grad_opts.seed, "first instance seed")->capture_default_str();
  grad_cmd->add_option("--r", grad_opts.r, "BFS distance cap")->capture_default_str();
  grad_cmd->add_option("--sinkhorn-iters", grad_opts.sinkhorn_iters, "normalization iterations")
      ->capture_default_str();
  grad_cmd->add_option("--temperature", grad_opts.temperature, "score temperature")
      ->capture_default_str();
  grad_cmd->add_option("--fd-step", grad_opts.h, "central difference step")
      ->capture_default_str();
  grad_cmd->add_option("--rel-tol", grad_opts.rel_tol, "relative tolerance")
      ->capture_default_str();
  grad_cmd->add_option("--abs-tol", grad_opts.abs_tol, "absolute tolerance floor")
      ->capture_default_str();

  XcatOpts xcat_opts;
  CLI::App* xcat_cmd = app.add_subcommand("xcat", "cross-category transfer matrix");
  xcat_cmd->add_option("--out", xcat_opts.out, "CSV output path")->required();
  xcat_cmd->add_option("--categories", xcat_opts.categories, "number of default categories")
      ->capture_default_str();
  xcat_cmd->add_option("--train-pairs", xcat_opts.train_pairs, "training pairs per category")
      ->capture_default_str();
  xcat_cmd->add_option("--test-pairs", xcat_opts.test_pairs, "held-out pairs per category")
      ->capture_default_str();
  xcat_cmd->add_option("--feat-dim", xcat_opts.feat_dim, "feature width")->capture_default_str();
  xcat_cmd->add_option("--data-seed", xcat_opts.seed, "generation seed")->capture_default_str();
  add_train_options(xcat_cmd, xcat_opts.train);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (threads > 0) set_threads(threads);
    if (app.got_subcommand(gen)) return run_gen_data(gen_opts);
    if (app.got_subcommand(train_cmd)) return run_train(train_opts);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval_opts);
    if (app.got_subcommand(match_cmd)) return run_match(match_opts);
    if (app.got_subcommand(grad_cmd)) return run_grad_check(grad_opts);
    if (app.got_subcommand(xcat_cmd)) return run_xcat(xcat_opts);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gmatch
