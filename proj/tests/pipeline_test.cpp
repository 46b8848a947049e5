// Copyright 2026 The RVL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "rvl/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rvl_pipeline_test_" + name);
  fs::remove_all(dir);
  return dir;
}

// Runs the CLI, returning its exit status; output goes to `log`.
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RVL_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Every regular file under `a` exists under `b` with equal bytes, and vice versa.
::testing::AssertionResult same_tree(const fs::path& a, const fs::path& b) {
  std::size_t count_a = 0, count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++count_a;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel)) return ::testing::AssertionFailure() << rel << " missing";
    if (slurp(e.path()) != slurp(b / rel)) return ::testing::AssertionFailure() << rel << " differs";
  }
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) ++count_b;
  if (count_a != count_b) return ::testing::AssertionFailure() << "file counts differ";
  return ::testing::AssertionSuccess();
}

rvl::ExperimentConfig tiny_config() {
  auto cfg = rvl::smoke_config(rvl::load_config(RVL_DEFAULT_CONFIG));
  cfg.dataset.n = 12;
  cfg.dataset.train_n = 10;
  cfg.surrogate.c.hidden_size = 4;
  cfg.surrogate.d.hidden_size = 4;
  cfg.surrogate.c.epochs = 3;
  cfg.surrogate.d.epochs = 3;
  cfg.agent.episodes = 20;
  cfg.baselines.episodes = 20;
  return cfg;
}

TEST(Cli, SmokeIsDeterministicAndComplete) {
  const auto a = scratch("smoke_a");
  const auto b = scratch("smoke_b");
  ASSERT_EQ(cli("smoke --out " + a.string(), a.string() + ".log"), 0) << slurp(a.string() + ".log");
  ASSERT_EQ(cli("smoke --out " + b.string(), b.string() + ".log"), 0) << slurp(b.string() + ".log");
  EXPECT_TRUE(same_tree(a, b));

  for (const char* f : {"table3.csv", "table4.csv", "table5.csv", "table6.csv",
                        "fig3_reactor_example.csv", "fig4_rvl_control.csv", "fig5_prediction.csv",
                        "fig6_rmse.csv", "fig7_pure_steps.csv", "fig8_combinations.csv",
                        "fig9_rewards.csv"}) {
    const auto p = a / "report" / f;
    ASSERT_TRUE(fs::exists(p)) << f;
    std::ifstream is(p);
    std::string first;
    std::getline(is, first);
    EXPECT_TRUE(rvl::parse_csv_provenance(first).has_value()) << f;
  }
  // Every CSV in the run carries provenance.
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream is(e.path());
    std::string first;
    std::getline(is, first);
    EXPECT_TRUE(rvl::parse_csv_provenance(first).has_value()) << e.path();
  }

  // Re-running the report leaves identical bytes.
  const std::string before = slurp(a / "report" / "table3.csv");
  ASSERT_EQ(cli("report --out " + a.string(), a.string() + ".log"), 0);
  EXPECT_EQ(slurp(a / "report" / "table3.csv"), before);
  EXPECT_TRUE(same_tree(a, b));

  // Seeded differently, the run differs.
  const auto c = scratch("smoke_c");
  ASSERT_EQ(cli("smoke --seed 7 --out " + c.string(), c.string() + ".log"), 0);
  EXPECT_NE(slurp(c / "config.json"), slurp(a / "config.json"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit");
  const auto log = dir.string() + ".log";
  EXPECT_EQ(cli("train --out " + dir.string() + " --variant rvl-999", log), 2);
  EXPECT_NE(slurp(log).find("unknown variant"), std::string::npos);
  EXPECT_EQ(cli("train --out " + dir.string() + " --variant mystery", log), 2);
  EXPECT_EQ(cli("nonsense", log), 2);
  EXPECT_EQ(cli("gen-data --out " + dir.string() + " --n -3", log), 2);

  fs::create_directories(dir);
  EXPECT_EQ(cli("report --out " + dir.string(), log), 3);
  EXPECT_NE(slurp(log).find("missing artifacts"), std::string::npos);
  EXPECT_NE(slurp(log).find("config.json"), std::string::npos);

  EXPECT_EQ(cli("gen-data --out " + dir.string() + " --n 6", log), 0) << slurp(log);
  EXPECT_EQ(cli("report --out " + dir.string(), log), 3);
  EXPECT_NE(slurp(log).find("model_c.json"), std::string::npos);
  EXPECT_NE(slurp(log).find("rvl-short.json"), std::string::npos);
  // A combination goes through combine, not train.
  EXPECT_EQ(cli("train --out " + dir.string() + " --variant rvl-short+rvl-long", log), 2);
}

TEST(Pipeline, GenDataPersistsOverrides) {
  const auto dir = scratch("gen");
  const auto log = dir.string() + ".log";
  ASSERT_EQ(cli("gen-data --out " + dir.string() + " --n 8 --seed 11", log), 0) << slurp(log);
  const auto cfg = rvl::load_run_config(dir);
  EXPECT_EQ(cfg.dataset.n, 8u);
  EXPECT_LT(cfg.dataset.train_n, 8u);
  EXPECT_EQ(cfg.master_seed, 11u);
  const auto ds = rvl::load_dataset((dir / "dataset.jsonl").string());
  EXPECT_EQ(ds.size(), 8u);
  ASSERT_TRUE(ds.provenance.has_value());
  EXPECT_EQ(*ds.provenance, rvl::provenance_of(cfg));
}

TEST(Pipeline, SurrogateResumeMatchesStraightRun) {
  const auto cfg = tiny_config();
  const auto straight = scratch("straight");
  const auto resumed = scratch("resumed");
  rvl::cmd_gen_data(cfg, straight);
  rvl::cmd_gen_data(cfg, resumed);
  rvl::cmd_train_surrogate(cfg, straight, 4);
  rvl::cmd_train_surrogate(cfg, resumed, 2);
  const auto half = rvl::load_model((resumed / "surrogate" / "model_c.json").string());
  EXPECT_EQ(half.epochs_trained, 2);
  rvl::cmd_train_surrogate(cfg, resumed, 4);
  EXPECT_TRUE(same_tree(straight, resumed));
  const auto full = rvl::load_model((resumed / "surrogate" / "model_c.json").string());
  ASSERT_EQ(full.loss_curve.size(), 4u);
  EXPECT_EQ(full.loss_curve[0], half.loss_curve[0]);
  EXPECT_EQ(full.loss_curve[1], half.loss_curve[1]);
}

TEST(Pipeline, ProvenanceMismatchIsRejected) {
  auto cfg = tiny_config();
  const auto dir = scratch("mismatch");
  rvl::cmd_gen_data(cfg, dir);
  cfg.master_seed += 1;
  EXPECT_THROW(rvl::cmd_train_surrogate(cfg, dir), rvl::Error);
}

TEST(Pipeline, CombiningAPolicyWithItselfIsIdentity) {
  const auto cfg = tiny_config();
  const auto dir = scratch("combine");
  rvl::cmd_gen_data(cfg, dir);
  rvl::cmd_train_surrogate(cfg, dir);
  const auto a = rvl::cmd_train(cfg, dir, "rvl-short");
  const auto self = rvl::cmd_combine(cfg, dir, "rvl-short+rvl-short");
  EXPECT_EQ(self.final_table.values(), a.final_table.values());

  // Checkpoints round-trip the values exactly; visit counts are not stored.
  const auto loaded = rvl::load_policy(rvl::RunPaths{dir}, "rvl-short", rvl::provenance_of(cfg));
  EXPECT_EQ(loaded.final_table.values(), a.final_table.values());
  ASSERT_TRUE(loaded.virtual_table.has_value());
  EXPECT_EQ(loaded.virtual_table->values(), a.virtual_table->values());
  EXPECT_EQ(loaded.seed, rvl::variant_seed(cfg, "rvl-short"));

  // An explicit seed replaces the derived one.
  const auto seeded = rvl::cmd_train(cfg, dir, "rvl-short", 5);
  EXPECT_EQ(seeded.seed, 5u);

  EXPECT_THROW(rvl::cmd_combine(cfg, dir, "rvl-short+rvl-long"), rvl::Error);
}

TEST(Pipeline, VariantNames) {
  const rvl::ExperimentConfig cfg;
  EXPECT_EQ(rvl::parse_variant("rvl-short", cfg).n_sight, 1);
  EXPECT_EQ(rvl::parse_variant("rvl-long", cfg).n_sight, 120);
  EXPECT_EQ(rvl::parse_variant("rvl-77", cfg).n_sight, 77);
  EXPECT_EQ(rvl::parse_variant("smsa", cfg).kind, rvl::VariantKind::kSmsa);
  EXPECT_EQ(rvl::parse_variant("rvl-short+rvl-50", cfg).parts.size(), 2u);
  EXPECT_THROW(rvl::parse_variant("rvl-0", cfg), rvl::ConfigError);
  EXPECT_THROW(rvl::parse_variant("rvl-121", cfg), rvl::ConfigError);
  EXPECT_THROW(rvl::parse_variant("a+b+c", cfg), rvl::ConfigError);
  EXPECT_EQ(rvl::variant_label("rvl-short+rvl-long", cfg), "short-long");
  EXPECT_EQ(rvl::variant_label("rvl-80", cfg), "80-step");
}

}  // namespace
