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

// Command-line front end: rvl <command> [options]. Exit status 0 on success,
// 2 on usage or configuration errors, 3 on any other failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvl/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out;
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::size_t> n;
};

// --config wins, then the run directory's config.json, then built-ins.
rvl::ExperimentConfig resolve_config(const Options& o) {
  if (!o.config.empty()) return rvl::load_config(o.config);
  if (!o.out.empty()) return rvl::load_run_config(o.out);
  return rvl::config_from_json(nlohmann::json::object());
}

fs::path resolve_out(const Options& o, const rvl::ExperimentConfig& cfg) {
  return o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out);
}

std::vector<std::string> expand(const std::string& variant, const std::vector<std::string>& all) {
  if (variant.empty() || variant == "all") return all;
  return {variant};
}

int run(const std::string& command, const Options& o) {
  rvl::ExperimentConfig cfg = resolve_config(o);
  const fs::path out = resolve_out(o, cfg);
  std::ostream* log = &std::cerr;

  if (command == "gen-data") {
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.n) {
      // Keep the configured train/test proportion.
      cfg.dataset.train_n = std::max<std::size_t>(1, *o.n * cfg.dataset.train_n / cfg.dataset.n);
      cfg.dataset.n = *o.n;
      if (cfg.dataset.train_n >= cfg.dataset.n) cfg.dataset.train_n = cfg.dataset.n - 1;
    }
    cfg.validate();
    rvl::cmd_gen_data(cfg, out, log);
  } else if (command == "train-surrogate") {
    rvl::cmd_train_surrogate(cfg, out, o.epochs, log);
  } else if (command == "train") {
    std::vector<std::string> all = rvl::pure_variants(cfg);
    for (const auto& b : rvl::baseline_variants()) all.push_back(b);
    const auto variants = expand(o.variant, all);
    if (o.seed && variants.size() != 1) throw rvl::ConfigError("--seed needs a single --variant");
    for (const auto& v : variants) {
      rvl::parse_variant(v, cfg);
      rvl::cmd_train(cfg, out, v, o.seed);
      *log << "trained " << v << "\n";
    }
  } else if (command == "combine") {
    for (const auto& v : expand(o.variant, rvl::combination_variants(cfg))) {
      rvl::cmd_combine(cfg, out, v);
      *log << "combined " << v << "\n";
    }
  } else if (command == "evaluate") {
    std::vector<std::string> all = rvl::pure_variants(cfg);
    for (const auto& c : rvl::combination_variants(cfg)) all.push_back(c);
    for (const auto& b : rvl::baseline_variants()) all.push_back(b);
    for (const auto& v : expand(o.variant, all)) {
      rvl::parse_variant(v, cfg);
      const auto m = rvl::cmd_evaluate(cfg, out, v);
      std::cout << v << ": C=" << rvl::format_sig10(m.c) << " D=" << rvl::format_sig10(m.d)
                << " V=" << rvl::format_sig10(m.v) << " objective=" << rvl::format_sig10(m.objective)
                << " total_benefits=" << rvl::format_sig10(m.total_benefits) << "\n";
    }
  } else if (command == "report") {
    for (const auto& p : rvl::cmd_report(out)) std::cout << p.string() << "\n";
  } else if (command == "smoke") {
    if (o.seed) cfg.master_seed = *o.seed;
    cfg = rvl::smoke_config(cfg);
    for (const auto& p : rvl::run_pipeline(cfg, out, log)) std::cout << p.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforcement virtual learning for fed-batch reactor control"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--out", o.out, "run directory");
  };
  auto variant = [&](CLI::App* sub, const char* help) {
    sub->add_option("--variant", o.variant, help);
  };

  auto* gen = app.add_subcommand("gen-data", "simulate the excitation dataset");
  common(gen);
  gen->add_option("--seed", o.seed, "master seed");
  gen->add_option("--n", o.n, "number of episodes")->check(CLI::PositiveNumber);

  auto* sur = app.add_subcommand("train-surrogate", "train or resume the [C] and [D] models");
  common(sur);
  sur->add_option("--epochs", o.epochs, "train up to this epoch")->check(CLI::PositiveNumber);

  auto* tr = app.add_subcommand("train", "train agents");
  common(tr);
  variant(tr, "rvl-short, rvl-long, rvl-<N>, qlearning, smsa or all");
  tr->add_option("--seed", o.seed, "agent seed (default derived from the master seed)");

  auto* comb = app.add_subcommand("combine", "combine two trained policies");
  common(comb);
  variant(comb, "A+B, for example rvl-short+rvl-long (default: all combinations)");

  auto* ev = app.add_subcommand("evaluate", "greedy episode on the simulator");
  common(ev);
  variant(ev, "policy to evaluate (default: all)");

  auto* rep = app.add_subcommand("report", "tables and figure data from a finished run");
  common(rep);

  auto* smoke = app.add_subcommand("smoke", "small end-to-end pipeline");
  common(smoke);
  smoke->add_option("--seed", o.seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const rvl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
