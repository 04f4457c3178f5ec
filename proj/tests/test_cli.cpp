#include "doctest.h"

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gmatch/cli.hpp"
#include "gmatch/trainer.hpp"

#include "test_util.hpp"

using namespace gmatch;

namespace {

struct CliRun {
  int exit_code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::vector<const char*> argv{"gmatch"};
  for (const std::string& a : args) argv.push_back(a.c_str());

  std::stringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  CliRun result;
  result.exit_code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

}  // namespace

TEST_CASE("help exits cleanly, usage errors exit with two") {
  CHECK(run({"--help"}).exit_code == 0);
  CHECK(run({}).exit_code == 2);                        // a subcommand is required
  CHECK(run({"train"}).exit_code == 2);                 // missing required options
  CHECK(run({"gen-data", "--out", "/tmp/x.jsonl", "--no-such-flag"}).exit_code == 2);
  CHECK(run({"frobnicate"}).exit_code == 2);
}

TEST_CASE("runtime failures exit with one and explain themselves") {
  const CliRun r = run({"eval", "--data", "/nonexistent/d.jsonl", "--ckpt", "/nonexistent/c.json"});
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("IoError") != std::string::npos);
}

TEST_CASE("the full pipeline runs end to end") {
  const std::string data = testutil::tmp_path("cli_data.jsonl");
  const std::string ckpt = testutil::tmp_path("cli_ckpt.json");
  const std::string eval_csv = testutil::tmp_path("cli_eval.csv");

  CliRun r = run({"gen-data", "--out", data, "--n", "6", "--pairs", "6", "--feat-dim", "4",
                  "--sigma", "0.05", "--seed", "3"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("wrote 6 pairs") != std::string::npos);

  r = run({"train", "--data", data, "--out", ckpt, "--steps", "4", "--batch", "3", "--widths",
           "8", "8", "--sinkhorn-iters", "10"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("trained to step 4") != std::string::npos);

  r = run({"eval", "--data", data, "--ckpt", ckpt, "--csv", eval_csv});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("mean_accuracy") != std::string::npos);
  CHECK(testutil::slurp(eval_csv).rfind("category,count,accuracy\n", 0) == 0);

  r = run({"match", "--data", data, "--ckpt", ckpt, "--index", "2"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"mapping\":[") != std::string::npos);
  CHECK(r.out.find("\"accuracy\":") != std::string::npos);

  r = run({"match", "--data", data, "--ckpt", ckpt, "--index", "99"});
  CHECK(r.exit_code == 1);

  std::remove(data.c_str());
  std::remove(ckpt.c_str());
  std::remove(eval_csv.c_str());
}

TEST_CASE("gradcheck subcommand reports per instance results") {
  const CliRun r = run({"gradcheck", "--instances", "2", "--n", "4", "--m", "4", "--feat-dim",
                        "3", "--widths", "6", "--sinkhorn-iters", "8"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("gradcheck pass") != std::string::npos);
}

TEST_CASE("config files fill defaults and flags beat them") {
  const std::string data = testutil::tmp_path("cfg_data.jsonl");
  const std::string ckpt = testutil::tmp_path("cfg_ckpt.json");
  const std::string cfg = testutil::tmp_path("cfg.json");

  CHECK(run({"gen-data", "--out", data, "--n", "6", "--pairs", "4", "--feat-dim", "3"}).exit_code ==
        0);
  testutil::spit(cfg, "{\"train\": {\"steps\": 3, \"widths\": [6, 6], \"sinkhorn-iters\": 8}}\n");

  CliRun r = run({"--config", cfg, "train", "--data", data, "--out", ckpt});
  CHECK(r.exit_code == 0);
  Checkpoint loaded = load_checkpoint(ckpt);
  CHECK(loaded.opt.step == 3);
  CHECK(loaded.config.hidden_widths == std::vector<int>{6, 6});

  r = run({"--config", cfg, "train", "--data", data, "--out", ckpt, "--steps", "5"});
  CHECK(r.exit_code == 0);
  loaded = load_checkpoint(ckpt);
  CHECK(loaded.opt.step == 5);  // the explicit flag wins

  testutil::spit(cfg, "{\"train\": {\"no-such-option\": 1}}\n");
  CHECK(run({"--config", cfg, "train", "--data", data, "--out", ckpt}).exit_code == 2);

  testutil::spit(cfg, "{broken");
  CHECK(run({"--config", cfg, "train", "--data", data, "--out", ckpt}).exit_code == 1);

  std::remove(data.c_str());
  std::remove(ckpt.c_str());
  std::remove(cfg.c_str());
}

TEST_CASE("ablation flags land in the stored config") {
  const std::string data = testutil::tmp_path("abl_data.jsonl");
  const std::string ckpt = testutil::tmp_path("abl_ckpt.json");
  CHECK(run({"gen-data", "--out", data, "--ambiguous-n", "8", "--pairs", "4"}).exit_code == 0);
  CHECK(run({"train", "--data", data, "--out", ckpt, "--steps", "2", "--batch", "2", "--widths",
             "6", "--sinkhorn-iters", "6", "--uniform-q", "--mean-agg"})
            .exit_code == 0);
  const Checkpoint loaded = load_checkpoint(ckpt);
  CHECK(loaded.config.position_mode == PositionMode::UNIFORM);
  CHECK(loaded.config.aggregator == Aggregator::MEAN);
  std::remove(data.c_str());
  std::remove(ckpt.c_str());
}

TEST_CASE("xcat writes the transfer matrix csv") {
  const std::string csv = testutil::tmp_path("xcat.csv");
  const CliRun r = run({"xcat", "--out", csv, "--categories", "2", "--train-pairs", "3",
                        "--test-pairs", "2", "--feat-dim", "4", "--steps", "2", "--batch", "2",
                        "--widths", "6", "--sinkhorn-iters", "6"});
  CHECK(r.exit_code == 0);
  const std::string text = testutil::slurp(csv);
  CHECK(text.rfind("train_category,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  std::remove(csv.c_str());
}

TEST_CASE("resuming from the cli continues the same run") {
  const std::string data = testutil::tmp_path("res_data.jsonl");
  const std::string ck_half = testutil::tmp_path("res_half.json");
  const std::string ck_full = testutil::tmp_path("res_full.json");
  const std::string ck_direct = testutil::tmp_path("res_direct.json");

  CHECK(run({"gen-data", "--out", data, "--n", "6", "--pairs", "5", "--feat-dim", "3",
             "--sigma", "0.05"})
            .exit_code == 0);
  const std::vector<std::string> common = {"--data", data,          "--batch", "2", "--widths",
                                           "6",      "--sinkhorn-iters", "6"};

  std::vector<std::string> direct = {"train", "--out", ck_direct, "--steps", "6"};
  direct.insert(direct.end(), common.begin(), common.end());
  CHECK(run(direct).exit_code == 0);

  std::vector<std::string> half = {"train", "--out", ck_half, "--steps", "3"};
  half.insert(half.end(), common.begin(), common.end());
  CHECK(run(half).exit_code == 0);

  std::vector<std::string> rest = {"train", "--out", ck_full, "--resume", ck_half, "--steps", "6"};
  rest.insert(rest.end(), common.begin(), common.end());
  CHECK(run(rest).exit_code == 0);

  CHECK(load_checkpoint(ck_full).params == load_checkpoint(ck_direct).params);
  std::remove(data.c_str());
  std::remove(ck_half.c_str());
  std::remove(ck_full.c_str());
  std::remove(ck_direct.c_str());
}
