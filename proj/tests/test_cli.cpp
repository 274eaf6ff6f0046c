// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "glycopipe/cli.hpp"
#include "glycopipe/glycopipe.hpp"

namespace fs = std::filesystem;
namespace gp = glycopipe;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "glycopipe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = gp::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(GLYCOPIPE_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return gp::io::read_file(p.string()); }

void write_json(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

nlohmann::json small_config() {
  return {{"cohort", {{"n", 400}, {"missing_rate", 0.02}}},
          {"preprocess", {{"select_k", 5}, {"pca_k", 3}, {"forest", {{"n_trees", 10}}}}},
          {"model",
           {{"epochs", 12},
            {"hidden_size", 4},
            {"lstm_layers", 1},
            {"mlp_hidden", {4}},
            {"batch_size", 32},
            {"learning_rate", 0.01},
            {"dropout_rate", 0.0}}}};
}

}  // namespace

TEST(Cli, UnknownSubcommandPrintsUsage) {
  const auto r = run({"frobnicate"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
  EXPECT_NE(r.err.find("generate"), std::string::npos);
}

TEST(Cli, MissingRequiredOptionFails) {
  const auto r = run({"generate", "--n", "10"});
  EXPECT_NE(r.code, 0);
}

TEST(Cli, GenerateIsDeterministicPerSeed) {
  const auto dir = scratch("generate");
  ASSERT_EQ(run({"generate", "--n", "50", "--seed", "5", "--out", (dir / "a.csv").string()}).code, 0);
  ASSERT_EQ(run({"generate", "--n", "50", "--seed", "5", "--out", (dir / "b.csv").string()}).code, 0);
  ASSERT_EQ(run({"generate", "--n", "50", "--seed", "6", "--out", (dir / "c.csv").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
  const auto t = gp::data::parse_table(slurp(dir / "a.csv"));
  EXPECT_EQ(t.row_count(), 50u);
}

TEST(Cli, GeneratePreprocessTrainEvaluate) {
  const auto dir = scratch("flow");
  const auto cfg = dir / "config.json";
  write_json(cfg, small_config());
  const std::string data = (dir / "cohort.csv").string();
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--seed", "3", "--out", data}).code, 0);

  const auto pre = run({"preprocess", "--config", cfg.string(), "--in", data, "--out", (dir / "prep.ckpt").string(),
                        "--ranking", (dir / "ranking.csv").string()});
  ASSERT_EQ(pre.code, 0) << pre.err;
  EXPECT_TRUE(fs::exists(dir / "ranking.csv"));

  auto train = [&](const std::string& out) {
    return run({"train", "--config", cfg.string(), "--data", data, "--preprocess", (dir / "prep.ckpt").string(),
                "--seed", "9", "--out", out});
  };
  const auto t1 = train((dir / "m1.ckpt").string());
  ASSERT_EQ(t1.code, 0) << t1.err;
  ASSERT_EQ(train((dir / "m2.ckpt").string()).code, 0);
  EXPECT_EQ(slurp(dir / "m1.ckpt"), slurp(dir / "m2.ckpt"));

  const auto ev = run({"evaluate", "--model", (dir / "m1.ckpt").string(), "--data", data, "--out",
                       (dir / "metrics.json").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  ASSERT_TRUE(metrics.contains("auc")) << metrics.dump();
  EXPECT_GT(metrics.at("auc").get<double>(), 0.5);
}

TEST(Cli, EvaluateRejectsMissingFile) {
  const auto r = run({"evaluate", "--model", "/nonexistent/model.ckpt", "--data", "/nonexistent/data.csv"});
  EXPECT_NE(r.code, 0);
}

TEST(Cli, KeygenWritesLoadableKey) {
  const auto dir = scratch("keygen");
  ASSERT_EQ(run({"keygen", "--bits", "96", "--seed", "2", "--out", (dir / "k").string()}).code, 0);
  const auto kp = gp::privacy::keypair_from_checkpoint(gp::io::load((dir / "k").string()));
  EXPECT_EQ(gp::privacy::detail::bit_length(kp.pub.n), 96u);
}

TEST(Cli, PipelineSmallCohortSucceeds) {
  const auto dir = scratch("pipeline_ok");
  write_json(dir / "config.json", small_config());
  const auto r = run({"pipeline", "--config", (dir / "config.json").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "pipeline_report.json"));
  ASSERT_EQ(report.at("stages").size(), 5u);
  for (const auto& s : report.at("stages")) EXPECT_EQ(s.at("status"), "success");
}

TEST(Cli, PipelineInjectedFailureExitsNonzero) {
  const auto dir = scratch("pipeline_fail");
  auto cfg = small_config();
  cfg["pipeline"] = {{"inject_failure", "model_training"}, {"inject_attempts", 5}};
  write_json(dir / "config.json", cfg);
  const auto r = run({"pipeline", "--config", (dir / "config.json").string(), "--out", (dir / "out").string()});
  EXPECT_NE(r.code, 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "pipeline_report.json"));
  const auto& stages = report.at("stages");
  EXPECT_EQ(stages[3].at("status"), "failed");
  EXPECT_EQ(stages[3].at("attempts"), 2);
  EXPECT_EQ(stages[4].at("status"), "skipped");
}
