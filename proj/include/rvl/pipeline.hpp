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

// Pipeline stages behind the command line: data generation, surrogate
// training, agent training, combination, evaluation and the report. Every
// artifact lives under one run directory and carries the config hash.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvl/agents.hpp"
#include "rvl/config.hpp"
#include "rvl/dataset.hpp"
#include "rvl/environment.hpp"
#include "rvl/error.hpp"
#include "rvl/parallel.hpp"
#include "rvl/provenance.hpp"
#include "rvl/qtable.hpp"
#include "rvl/reactor.hpp"
#include "rvl/surrogate.hpp"

namespace rvl {

namespace fs = std::filesystem;

// ---- run directory layout --------------------------------------------------

struct RunPaths {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path dataset() const { return root / "dataset.jsonl"; }
  fs::path surrogate_dir() const { return root / "surrogate"; }
  fs::path model(Product p) const {
    return surrogate_dir() / (p == Product::kC ? "model_c.json" : "model_d.json");
  }
  fs::path loss(Product p) const {
    return surrogate_dir() / (p == Product::kC ? "loss_c.csv" : "loss_d.csv");
  }
  fs::path rmse() const { return surrogate_dir() / "rmse.csv"; }
  fs::path prediction() const { return surrogate_dir() / "prediction.csv"; }
  fs::path policy(const std::string& v) const { return root / "policies" / (v + ".json"); }
  fs::path log(const std::string& v) const { return root / "logs" / (v + ".csv"); }
  fs::path eval(const std::string& v) const { return root / "eval" / (v + ".json"); }
  fs::path trajectory(const std::string& v) const {
    return root / "eval" / (v + "_trajectory.csv");
  }
  fs::path report_dir() const { return root / "report"; }
};

// ---- small file helpers ----------------------------------------------------

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("write failed: " + path.string());
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::string read_first_line(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  return line;
}

inline void require_provenance(const std::optional<Provenance>& found, const Provenance& want,
                               const fs::path& path) {
  if (!found) throw Error(path.string() + " carries no provenance record");
  if (found->config_hash != want.config_hash || found->master_seed != want.master_seed)
    throw Error(path.string() + " was produced under config " + found->config_hash + " seed " +
                std::to_string(found->master_seed) + ", expected " + want.config_hash +
                " seed " + std::to_string(want.master_seed));
}

inline std::optional<Provenance> json_provenance(const nlohmann::json& j) {
  if (!j.contains("provenance")) return std::nullopt;
  return provenance_from_json(j.at("provenance"));
}

}  // namespace detail

// Config of a run: the run directory's config.json when present, otherwise
// the built-in defaults.
inline ExperimentConfig load_run_config(const fs::path& root) {
  const RunPaths paths{root};
  if (fs::exists(paths.config())) return load_config(paths.config().string());
  return config_from_json(nlohmann::json::object());
}

inline void write_run_config(const RunPaths& paths, const ExperimentConfig& cfg) {
  detail::write_json(paths.config(), to_json(cfg));
}

// ---- variants --------------------------------------------------------------

enum class VariantKind { kRvl, kQLearning, kSmsa, kCombined };

struct Variant {
  std::string name;
  VariantKind kind = VariantKind::kRvl;
  int n_sight = 0;                  // rvl only
  std::vector<std::string> parts;   // combined only
};

inline Variant parse_variant(const std::string& name, const ExperimentConfig& cfg) {
  Variant v;
  v.name = name;
  if (name == "qlearning") {
    v.kind = VariantKind::kQLearning;
    return v;
  }
  if (name == "smsa") {
    v.kind = VariantKind::kSmsa;
    return v;
  }
  if (const auto plus = name.find('+'); plus != std::string::npos) {
    v.kind = VariantKind::kCombined;
    v.parts = {name.substr(0, plus), name.substr(plus + 1)};
    for (const auto& p : v.parts)
      if (parse_variant(p, cfg).kind == VariantKind::kCombined)
        throw ConfigError("a combination joins exactly two policies: '" + name + "'");
    return v;
  }
  if (name == "rvl-short") {
    v.n_sight = cfg.sights.short_sight;
    return v;
  }
  if (name == "rvl-long") {
    v.n_sight = cfg.sights.long_sight;
    return v;
  }
  if (name.rfind("rvl-", 0) == 0 && name.size() > 4 &&
      name.find_first_not_of("0123456789", 4) == std::string::npos && name.size() <= 7) {
    v.n_sight = std::stoi(name.substr(4));
    if (v.n_sight >= 1 && v.n_sight <= 120) return v;
  }
  throw ConfigError("unknown variant '" + name +
                    "' (expected rvl-short, rvl-long, rvl-<1..120>, qlearning, smsa or A+B)");
}

inline std::string immediate_name(int n) { return "rvl-" + std::to_string(n); }

// Every training variant the report needs, in table order.
inline std::vector<std::string> pure_variants(const ExperimentConfig& cfg) {
  std::vector<std::string> out{"rvl-short"};
  for (int n : cfg.sights.immediate) out.push_back(immediate_name(n));
  out.push_back("rvl-long");
  return out;
}

inline std::vector<std::string> combination_variants(const ExperimentConfig& cfg) {
  const std::string imm = immediate_name(cfg.sights.combination_immediate);
  return {"rvl-short+" + imm, imm + "+rvl-long", "rvl-short+rvl-long"};
}

inline std::vector<std::string> baseline_variants() { return {"qlearning", "smsa"}; }

// ---- policy checkpoints ----------------------------------------------------

inline constexpr int kPolicyCheckpointVersion = 1;

struct PolicyCheckpoint {
  std::string variant;
  VariantKind kind = VariantKind::kRvl;
  int n_sight = 0;
  std::uint64_t seed = 0;
  QTable final_table;                  // B_r, the baseline table or the combination
  std::optional<QTable> virtual_table; // B_v for rvl variants
  nlohmann::json config;               // learner hyperparameters
  Provenance provenance;
};

inline const char* variant_kind_name(VariantKind k) {
  switch (k) {
    case VariantKind::kQLearning: return "qlearning";
    case VariantKind::kSmsa: return "smsa";
    case VariantKind::kCombined: return "combined";
    case VariantKind::kRvl: break;
  }
  return "rvl";
}

inline VariantKind variant_kind_from_name(const std::string& s) {
  if (s == "rvl") return VariantKind::kRvl;
  if (s == "qlearning") return VariantKind::kQLearning;
  if (s == "smsa") return VariantKind::kSmsa;
  if (s == "combined") return VariantKind::kCombined;
  throw Error("unknown policy kind '" + s + "'");
}

inline nlohmann::json table_to_json(const QTable& q) {
  nlohmann::json rows = nlohmann::json::array();
  for (int s = 1; s <= kNumStates; ++s) {
    std::vector<double> row;
    for (int a = 1; a <= kNumActions; ++a) row.push_back(q(DiscreteState(s), ControlAction(a)));
    rows.push_back(row);
  }
  return rows;
}

inline QTable table_from_json(const nlohmann::json& j) {
  QTable q;
  if (!j.is_array() || j.size() != static_cast<std::size_t>(kNumStates))
    throw ShapeError("policy table must have 10 rows");
  for (int s = 1; s <= kNumStates; ++s) {
    const auto row = j.at(static_cast<std::size_t>(s - 1)).get<std::vector<double>>();
    if (row.size() != static_cast<std::size_t>(kNumActions))
      throw ShapeError("policy table rows must have 9 values");
    for (int a = 1; a <= kNumActions; ++a)
      q(DiscreteState(s), ControlAction(a)) = row[static_cast<std::size_t>(a - 1)];
  }
  if (!q.all_finite()) throw ShapeError("policy table holds non-finite values");
  return q;
}

inline nlohmann::json to_json(const PolicyCheckpoint& p) {
  nlohmann::json j = {{"format", "rvl-policy"},
                      {"version", kPolicyCheckpointVersion},
                      {"variant", p.variant},
                      {"kind", variant_kind_name(p.kind)},
                      {"n_sight", p.n_sight},
                      {"seed", p.seed},
                      {"final_table", table_to_json(p.final_table)},
                      {"config", p.config},
                      {"provenance", to_json(p.provenance)}};
  if (p.virtual_table) j["virtual_table"] = table_to_json(*p.virtual_table);
  return j;
}

inline PolicyCheckpoint policy_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rvl-policy") throw ShapeError("not a policy checkpoint");
    if (j.at("version").get<int>() != kPolicyCheckpointVersion)
      throw ShapeError("unsupported policy checkpoint version");
    PolicyCheckpoint p;
    p.variant = j.at("variant").get<std::string>();
    p.kind = variant_kind_from_name(j.at("kind").get<std::string>());
    p.n_sight = j.at("n_sight").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.final_table = table_from_json(j.at("final_table"));
    if (j.contains("virtual_table")) p.virtual_table = table_from_json(j.at("virtual_table"));
    p.config = j.at("config");
    p.provenance = provenance_from_json(j.at("provenance"));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("malformed policy checkpoint: ") + e.what());
  }
}

inline PolicyCheckpoint load_policy(const RunPaths& paths, const std::string& variant,
                                    const Provenance& want) {
  const auto path = paths.policy(variant);
  if (!fs::exists(path)) throw Error("missing policy checkpoint " + path.string());
  auto p = policy_from_json(detail::read_json(path));
  detail::require_provenance(p.provenance, want, path);
  return p;
}

// ---- stages ----------------------------------------------------------------

using ProgressSink = std::ostream*;

inline Dataset cmd_gen_data(const ExperimentConfig& cfg, const fs::path& root,
                            ProgressSink log = nullptr) {
  const RunPaths paths{root};
  fs::create_directories(root);
  write_run_config(paths, cfg);
  Dataset ds = generate_dataset(cfg.dataset.n, cfg.dataset.excitation, cfg.reactor,
                                stream_seed(cfg, "dataset"));
  ds.provenance = provenance_of(cfg);
  save_dataset(paths.dataset().string(), ds);
  if (log) *log << "wrote " << ds.size() << " episodes to " << paths.dataset().string() << "\n";
  return ds;
}

inline Dataset load_run_dataset(const RunPaths& paths, const ExperimentConfig& cfg) {
  if (!fs::exists(paths.dataset())) throw Error("missing dataset " + paths.dataset().string());
  Dataset ds = load_dataset(paths.dataset().string());
  detail::require_provenance(ds.provenance, provenance_of(cfg), paths.dataset());
  return ds;
}

inline DatasetSplit run_split(const Dataset& ds, const ExperimentConfig& cfg) {
  return split_dataset(ds, cfg.dataset.train_n, stream_seed(cfg, "split"));
}

inline TrainingConfig surrogate_training_config(const ExperimentConfig& cfg, Product p) {
  TrainingConfig t = p == Product::kC ? cfg.surrogate.c : cfg.surrogate.d;
  t.seed = stream_seed(cfg, p == Product::kC ? "surrogate/C" : "surrogate/D");
  return t;
}

inline std::string loss_csv(const TrainedModel& tm, const Provenance& prov) {
  std::ostringstream os;
  os << prov.csv_comment() << "epoch,loss\n";
  for (std::size_t i = 0; i < tm.loss_curve.size(); ++i)
    os << (i + 1) << ',' << format_sig10(tm.loss_curve[i]) << '\n';
  return os.str();
}

// Trains both models up to `epochs` (default: the configured budget),
// resuming from existing checkpoints of the same configuration.
inline VirtualSpace cmd_train_surrogate(const ExperimentConfig& cfg, const fs::path& root,
                                        std::optional<int> epochs = std::nullopt,
                                        ProgressSink log = nullptr) {
  const RunPaths paths{root};
  const Provenance prov = provenance_of(cfg);
  const Dataset ds = load_run_dataset(paths, cfg);
  const DatasetSplit split = run_split(ds, cfg);
  if (split.train.empty()) throw ConfigError("dataset.train_n must be >= 1 to train the surrogate");
  fs::create_directories(paths.surrogate_dir());

  const Product products[2] = {Product::kC, Product::kD};
  TrainedModel models[2];
  for (int i = 0; i < 2; ++i) {
    const Product p = products[i];
    const TrainingConfig tc = surrogate_training_config(cfg, p);
    const auto path = paths.model(p);
    bool resumed = false;
    if (fs::exists(path)) {
      TrainedModel old = load_model(path.string());
      if (old.provenance == prov && old.config == tc) {
        models[i] = std::move(old);
        resumed = true;
      }
    }
    if (!resumed) {
      models[i] = make_untrained(p, tc, cfg.surrogate.normalization);
      models[i].provenance = prov;
    }
  }

  std::mutex log_mu;
  parallel_for(2, [&](std::size_t i) {
    TrainedModel& tm = models[i];
    const int target = epochs.value_or(tm.config.epochs);
    if (target < 1) throw ConfigError("--epochs must be >= 1");
    const int every = std::max(1, target / 20);
    train(tm, split.train, target, [&](int epoch, double loss) {
      if (log && (epoch % every == 0 || epoch == target)) {
        std::lock_guard lock(log_mu);
        *log << "model " << product_name(tm.product) << " epoch " << epoch << "/" << target
             << " loss " << format_sig10(loss) << "\n";
      }
    });
    save_model(paths.model(tm.product).string(), tm);
    detail::write_text(paths.loss(tm.product), loss_csv(tm, prov));
  });

  VirtualSpace vs(models[0], models[1]);
  const auto& eval_set = split.test.empty() ? split.train : split.test;
  const auto [rc, rd] = evaluate_rmse(vs, eval_set);
  {
    std::ostringstream os;
    os << prov.csv_comment() << "t,rmse_c,rmse_d\n";
    for (std::size_t t = 0; t < rc.per_step.size(); ++t)
      os << t << ',' << format_sig10(rc.per_step[t]) << ',' << format_sig10(rd.per_step[t]) << '\n';
    detail::write_text(paths.rmse(), os.str());
  }
  {
    const auto& ep = eval_set.front();
    const auto pred = rollout_predict(vs, ep.controls, ep.c_series.front(), ep.d_series.front());
    std::ostringstream os;
    os << prov.csv_comment() << "t,u,c_true,c_pred,d_true,d_pred\n";
    for (std::size_t t = 0; t < ep.c_series.size(); ++t)
      os << t << ',' << format_sig10(t == 0 ? 0.0 : ep.controls[t - 1]) << ','
         << format_sig10(ep.c_series[t]) << ',' << format_sig10(pred.c[t]) << ','
         << format_sig10(ep.d_series[t]) << ',' << format_sig10(pred.d[t]) << '\n';
    detail::write_text(paths.prediction(), os.str());
  }
  if (log)
    *log << "held-out mean RMSE: C " << format_sig10(rc.mean) << ", D " << format_sig10(rd.mean)
         << "\n";
  return vs;
}

inline VirtualSpace load_run_surrogate(const RunPaths& paths, const ExperimentConfig& cfg) {
  const Provenance prov = provenance_of(cfg);
  TrainedModel m[2];
  const Product products[2] = {Product::kC, Product::kD};
  for (int i = 0; i < 2; ++i) {
    const auto path = paths.model(products[i]);
    if (!fs::exists(path)) throw Error("missing surrogate checkpoint " + path.string());
    m[i] = load_model(path.string());
    detail::require_provenance(m[i].provenance, prov, path);
  }
  return VirtualSpace(std::move(m[0]), std::move(m[1]));
}

inline nlohmann::json agent_config_json(const RVLConfig& c) {
  return {{"alpha", c.alpha},
          {"gamma_v", c.gamma_v},
          {"gamma_r", c.gamma_r},
          {"epsilon", c.epsilon},
          {"top_k", c.top_k},
          {"n_sight", c.n_sight},
          {"schedule_period", c.schedule_period},
          {"episodes", c.episodes},
          {"bootstrap_next_best", c.bootstrap_next_best}};
}

inline nlohmann::json tabular_config_json(const TabularConfig& c, int m_max) {
  return {{"alpha", c.alpha},
          {"gamma", c.gamma},
          {"epsilon", c.epsilon},
          {"episodes", c.episodes},
          {"m_max", m_max}};
}

inline std::uint64_t variant_seed(const ExperimentConfig& cfg, const std::string& variant) {
  return stream_seed(cfg, "agent/" + variant);
}

// Trains one pure variant. `seed` overrides the variant's derived stream.
inline PolicyCheckpoint cmd_train(const ExperimentConfig& cfg, const fs::path& root,
                                  const std::string& variant_name,
                                  std::optional<std::uint64_t> seed = std::nullopt,
                                  const VirtualSpace* surrogate = nullptr) {
  const RunPaths paths{root};
  const Variant v = parse_variant(variant_name, cfg);
  if (v.kind == VariantKind::kCombined)
    throw ConfigError("'" + variant_name + "' is a combination; use the combine command");
  const Provenance prov = provenance_of(cfg);
  const RealEnv renv(cfg.reactor, cfg.mdp);

  PolicyCheckpoint ck;
  ck.variant = v.name;
  ck.kind = v.kind;
  ck.seed = seed.value_or(variant_seed(cfg, v.name));
  ck.provenance = prov;

  std::ostringstream log;
  log << prov.csv_comment() << "iteration,kind,return\n";
  if (v.kind == VariantKind::kRvl) {
    std::optional<VirtualSpace> loaded;
    if (!surrogate) {
      loaded = load_run_surrogate(paths, cfg);
      surrogate = &*loaded;
    }
    const VirtualEnv venv(*surrogate, cfg.reactor, cfg.mdp);
    RVLConfig rc = cfg.agent;
    rc.n_sight = v.n_sight;
    rc.seed = ck.seed;
    const RVLResult res = train_rvl(renv, venv, rc);
    ck.n_sight = v.n_sight;
    ck.final_table = res.policy.real_table;
    ck.virtual_table = res.policy.virtual_table;
    ck.config = agent_config_json(rc);
    for (const auto& e : res.log.entries)
      log << e.iteration << ',' << episode_kind_name(e.kind) << ',' << format_sig10(e.episode_return)
          << '\n';
  } else {
    TabularConfig tc = cfg.baselines;
    tc.seed = ck.seed;
    const int m_max = v.kind == VariantKind::kQLearning ? 1 : tc.m_max;
    const TabularResult res = train_tabular(renv, tc, m_max);
    ck.final_table = res.table;
    ck.config = tabular_config_json(tc, m_max);
    for (std::size_t i = 0; i < res.returns.size(); ++i)
      log << (i + 1) << ",real," << format_sig10(res.returns[i]) << '\n';
  }
  detail::write_json(paths.policy(v.name), to_json(ck));
  detail::write_text(paths.log(v.name), log.str());
  return ck;
}

inline PolicyCheckpoint cmd_combine(const ExperimentConfig& cfg, const fs::path& root,
                                    const std::string& combination) {
  const RunPaths paths{root};
  const Variant v = parse_variant(combination, cfg);
  if (v.kind != VariantKind::kCombined)
    throw ConfigError("combine expects two policies joined by '+', got '" + combination + "'");
  const Provenance prov = provenance_of(cfg);
  const auto a = load_policy(paths, v.parts[0], prov);
  const auto b = load_policy(paths, v.parts[1], prov);
  PolicyCheckpoint ck;
  ck.variant = v.name;
  ck.kind = VariantKind::kCombined;
  ck.final_table = combine_tables(a.final_table, b.final_table);
  ck.config = {{"parts", v.parts}};
  ck.provenance = prov;
  detail::write_json(paths.policy(v.name), to_json(ck));
  return ck;
}

inline nlohmann::json metrics_to_json(const std::string& variant, const ControlMetrics& m,
                                      const Provenance& prov) {
  return {{"variant", variant},
          {"C", m.c},
          {"D", m.d},
          {"V", m.v},
          {"C_minus_D", m.c_minus_d},
          {"objective", m.objective},
          {"total_expected_benefits", m.total_benefits},
          {"states", m.states},
          {"rewards", m.rewards},
          {"provenance", to_json(prov)}};
}

inline ControlMetrics cmd_evaluate(const ExperimentConfig& cfg, const fs::path& root,
                                   const std::string& variant) {
  const RunPaths paths{root};
  const Provenance prov = provenance_of(cfg);
  const auto ck = load_policy(paths, variant, prov);
  const RealEnv renv(cfg.reactor, cfg.mdp);
  const ControlMetrics m = evaluate_policy(ck.final_table, renv);
  detail::write_json(paths.eval(variant), metrics_to_json(variant, m, prov));
  std::ostringstream os;
  os << prov.csv_comment();
  write_trajectory_csv(os, m.trajectory, cfg.reactor);
  detail::write_text(paths.trajectory(variant), os.str());
  return m;
}

// ---- report ----------------------------------------------------------------

struct PublishedRow {
  const char* name;
  double c, d, v, c_minus_d, objective;
};

// Published results, kept for side-by-side comparison.
inline constexpr PublishedRow kPublishedComparison[] = {
    {"Recurrent neuro-fuzzy network", 0.0559, 0.0304, 0.9900, 0.0355, 0.0351},
    {"Nominal control", 0.0615, 0.0345, 0.9918, 0.0267, 0.0264},
    {"Minimal risk", 0.0612, 0.0236, 1.000, 0.0376, 0.0376},
    {"Q-learning", 0.0590, 0.0193, 0.9220, 0.0366, 0.0366},
    {"SMSA", 0.0618, 0.0236, 0.9800, 0.0361, 0.0361},
    {"RVL", 0.0614, 0.0199, 0.9254, 0.0415, 0.0384},
};

struct PublishedStepRow {
  const char* variant;
  double c, d, v, objective, total_benefits;
};

inline constexpr PublishedStepRow kPublishedSteps[] = {
    {"1-step", 0.0606, 0.0182, 0.8999, 0.0381, 33100},
    {"30-step", 0.0558, 0.0173, 0.9433, 0.0363, 6500},
    {"50-step", 0.0566, 0.0179, 0.9638, 0.0372, 16200},
    {"80-step", 0.0579, 0.0218, 1.0000, 0.0361, 7900},
    {"120-step", 0.0613, 0.0211, 0.9254, 0.0372, 26700},
    {"short-immediate", 0.0603, 0.0173, 0.8898, 0.0382, 34400},
    {"immediate-long", 0.0601, 0.0171, 0.8913, 0.0383, 33400},
    {"short-long", 0.0614, 0.0199, 0.9254, 0.0384, 30800},
};

inline std::optional<PublishedStepRow> published_step_row(const std::string& label) {
  for (const auto& r : kPublishedSteps)
    if (label == r.variant) return r;
  return std::nullopt;
}

// Human label of a variant, as used in the published tables.
inline std::string variant_label(const std::string& name, const ExperimentConfig& cfg) {
  const Variant v = parse_variant(name, cfg);
  auto sight_word = [&](const std::string& part) {
    const Variant p = parse_variant(part, cfg);
    if (p.n_sight == cfg.sights.short_sight && part == "rvl-short") return std::string("short");
    if (part == "rvl-long") return std::string("long");
    return std::string("immediate");
  };
  switch (v.kind) {
    case VariantKind::kQLearning: return "Q-learning";
    case VariantKind::kSmsa: return "SMSA";
    case VariantKind::kCombined: return sight_word(v.parts[0]) + "-" + sight_word(v.parts[1]);
    case VariantKind::kRvl: break;
  }
  return std::to_string(v.n_sight) + "-step";
}

struct EvalRecord {
  std::string variant;
  double c = 0, d = 0, v = 0, c_minus_d = 0, objective = 0, total = 0;
  std::vector<double> rewards;
  std::vector<std::vector<double>> trajectory;  // rows of t,u,A,B,C,D,V
};

inline std::vector<std::vector<double>> read_trajectory(const fs::path& path, const Provenance& want) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  detail::require_provenance(parse_csv_provenance(line), want, path);
  std::getline(is, line);
  if (line != "t,u,A,B,C,D,V") throw Error(path.string() + ": unexpected trajectory header");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 7) throw Error(path.string() + ": malformed trajectory row");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string fmt(double x) { return format_sig10(x); }

// Builds the report bundle from a finished run directory. Throws listing
// every missing artifact, or on any provenance mismatch.
inline std::vector<fs::path> cmd_report(const fs::path& root) {
  const RunPaths paths{root};
  if (!fs::exists(paths.config()))
    throw Error("missing artifacts in " + root.string() + ":\n  " + paths.config().string());
  const ExperimentConfig cfg = load_config(paths.config().string());
  const Provenance prov = provenance_of(cfg);

  const auto pures = pure_variants(cfg);
  const auto combos = combination_variants(cfg);
  const auto bases = baseline_variants();
  std::vector<std::string> all = pures;
  all.insert(all.end(), combos.begin(), combos.end());
  all.insert(all.end(), bases.begin(), bases.end());

  std::vector<fs::path> required{paths.dataset(), paths.model(Product::kC), paths.model(Product::kD),
                                 paths.loss(Product::kC), paths.loss(Product::kD), paths.rmse(),
                                 paths.prediction()};
  for (const auto& v : all) {
    required.push_back(paths.policy(v));
    required.push_back(paths.eval(v));
    required.push_back(paths.trajectory(v));
  }
  std::string missing;
  for (const auto& p : required)
    if (!fs::exists(p)) missing += "\n  " + p.string();
  if (!missing.empty()) throw Error("missing artifacts in " + root.string() + ":" + missing);

  // Provenance of every artifact that is not re-read below.
  detail::require_provenance(parse_csv_provenance(detail::read_first_line(paths.loss(Product::kC))),
                             prov, paths.loss(Product::kC));
  detail::require_provenance(parse_csv_provenance(detail::read_first_line(paths.loss(Product::kD))),
                             prov, paths.loss(Product::kD));
  {
    std::ifstream is(paths.dataset(), std::ios::binary);
    std::string first;
    std::getline(is, first);
      std::optional<Provenance> p;
    try {
      p = detail::json_provenance(nlohmann::json::parse(first));
    } catch (const nlohmann::json::exception& e) {
      throw Error(paths.dataset().string() + ": " + e.what());
    }
    detail::require_provenance(p, prov, paths.dataset());
  }
  for (const Product pr : {Product::kC, Product::kD}) {
    const auto j = detail::read_json(paths.model(pr));
    detail::require_provenance(detail::json_provenance(j), prov, paths.model(pr));
  }
  for (const auto& v : all) {
    const auto j = detail::read_json(paths.policy(v));
    detail::require_provenance(detail::json_provenance(j), prov, paths.policy(v));
  }

  std::map<std::string, EvalRecord> evals;
  for (const auto& v : all) {
    const auto j = detail::read_json(paths.eval(v));
    detail::require_provenance(detail::json_provenance(j), prov, paths.eval(v));
    EvalRecord r;
    r.variant = v;
    r.c = j.at("C").get<double>();
    r.d = j.at("D").get<double>();
    r.v = j.at("V").get<double>();
    r.c_minus_d = j.at("C_minus_D").get<double>();
    r.objective = j.at("objective").get<double>();
    r.total = j.at("total_expected_benefits").get<double>();
    r.rewards = j.at("rewards").get<std::vector<double>>();
    r.trajectory = read_trajectory(paths.trajectory(v), prov);
    evals[v] = std::move(r);
  }

  const std::string head = prov.csv_comment();
  std::vector<fs::path> written;
  auto emit = [&](const std::string& file, const std::string& body) {
    const auto path = paths.report_dir() / file;
    detail::write_text(path, head + body);
    written.push_back(path);
  };

  // Method comparison: measured rows, then the published rows with recomputed columns.
  {
    std::ostringstream os;
    os << "algorithm,source,C,D,V,C_minus_D,objective,note\n";
    const std::string best = combos.back();
    auto measured = [&](const std::string& label, const EvalRecord& r) {
      os << label << ",measured," << fmt(r.c) << ',' << fmt(r.d) << ',' << fmt(r.v) << ','
         << fmt(r.c_minus_d) << ',' << fmt(r.objective) << ",\n";
    };
    measured("RVL (short-long)", evals.at(best));
    measured("Q-learning", evals.at("qlearning"));
    measured("SMSA", evals.at("smsa"));
    for (const auto& p : kPublishedComparison) {
      const double cmd = p.c - p.d;
      const double obj = cmd * p.v;
      std::string note;
      if (std::abs(cmd - p.c_minus_d) > 5e-4)
        note += "printed C-D " + fmt(p.c_minus_d) + " differs from C-D recomputed " + fmt(cmd) + ";";
      if (std::abs(obj - p.objective) > 5e-4)
        note += "printed objective " + fmt(p.objective) + " differs from (C-D)*V recomputed " +
                fmt(obj) + ";";
      if (!note.empty()) note.pop_back();
      os << p.name << ",published," << fmt(p.c) << ',' << fmt(p.d) << ',' << fmt(p.v) << ','
         << fmt(p.c_minus_d) << ',' << fmt(p.objective) << ',' << note << '\n';
    }
    emit("table3.csv", os.str());
  }

  auto step_table = [&](const std::vector<std::string>& variants) {
    std::ostringstream os;
    os << "variant,label,C,D,V,objective,published_C,published_D,published_V,published_objective\n";
    for (const auto& v : variants) {
      const auto& r = evals.at(v);
      const std::string label = variant_label(v, cfg);
      os << v << ',' << label << ',' << fmt(r.c) << ',' << fmt(r.d) << ',' << fmt(r.v) << ','
         << fmt(r.objective);
      if (const auto p = published_step_row(label))
        os << ',' << fmt(p->c) << ',' << fmt(p->d) << ',' << fmt(p->v) << ',' << fmt(p->objective);
      else
        os << ",,,,";
      os << '\n';
    }
    return os.str();
  };
  emit("table4.csv", step_table(pures));
  emit("table5.csv", step_table(combos));

  {
    std::ostringstream os;
    os << "variant,label,total_expected_benefits,published_total_expected_benefits\n";
    std::vector<std::string> rows = pures;
    rows.insert(rows.end(), combos.begin(), combos.end());
    for (const auto& v : rows) {
      const std::string label = variant_label(v, cfg);
      os << v << ',' << label << ',' << fmt(evals.at(v).total) << ',';
      if (const auto p = published_step_row(label)) os << fmt(p->total_benefits);
      os << '\n';
    }
    emit("table6.csv", os.str());
  }

  // Figures as plot-ready series.
  auto body_after_header = [&](const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::string line, out;
    std::getline(is, line);  // provenance
    while (std::getline(is, line)) out += line + "\n";
    return out;
  };
  {
    // An excitation episode of the dataset, re-simulated for the full state.
    const Dataset ds = load_run_dataset(paths, cfg);
    std::ostringstream os;
    write_trajectory_csv(os, simulate(ds.episodes.front().controls, cfg.reactor), cfg.reactor);
    emit("fig3_reactor_example.csv", os.str());
  }
  {
    const auto& r = evals.at(combos.back());
    std::ostringstream os;
    os << "t,u,C,D\n";
    for (const auto& row : r.trajectory)
      os << fmt(row[0]) << ',' << fmt(row[1]) << ',' << fmt(row[4]) << ',' << fmt(row[5]) << '\n';
    emit("fig4_rvl_control.csv", os.str());
  }
  emit("fig5_prediction.csv", body_after_header(paths.prediction()));
  emit("fig6_rmse.csv", body_after_header(paths.rmse()));
  auto curves = [&](const std::vector<std::string>& variants) {
    std::ostringstream os;
    os << 't';
    for (const auto& v : variants) os << ",C_" << v << ",D_" << v;
    os << '\n';
    const std::size_t n = evals.at(variants.front()).trajectory.size();
    for (std::size_t t = 0; t < n; ++t) {
      os << fmt(evals.at(variants.front()).trajectory[t][0]);
      for (const auto& v : variants)
        os << ',' << fmt(evals.at(v).trajectory[t][4]) << ',' << fmt(evals.at(v).trajectory[t][5]);
      os << '\n';
    }
    return os.str();
  };
  emit("fig7_pure_steps.csv", curves(pures));
  emit("fig8_combinations.csv", curves(combos));
  {
    std::vector<std::string> rows = pures;
    rows.insert(rows.end(), combos.begin(), combos.end());
    std::ostringstream os;
    os << 't';
    for (const auto& v : rows) os << ',' << v;
    os << '\n';
    const std::size_t n = evals.at(rows.front()).rewards.size();
    for (std::size_t t = 0; t < n; ++t) {
      os << (t + 1);
      for (const auto& v : rows) os << ',' << fmt(evals.at(v).rewards[t]);
      os << '\n';
    }
    emit("fig9_rewards.csv", os.str());
  }
  return written;
}

// ---- smoke -----------------------------------------------------------------

// Small-scale overrides that keep every stage exercised.
inline ExperimentConfig smoke_config(ExperimentConfig cfg) {
  cfg.dataset.n = 50;
  cfg.dataset.train_n = 40;
  cfg.surrogate.c.epochs = 5;
  cfg.surrogate.d.epochs = 5;
  cfg.agent.episodes = 50;
  cfg.agent.surrogate_epochs = 5;
  cfg.baselines.episodes = 50;
  cfg.validate();
  return cfg;
}

// Trains every pure variant and baseline, then combines and evaluates.
inline void train_all(const ExperimentConfig& cfg, const fs::path& root, ProgressSink log = nullptr) {
  const RunPaths paths{root};
  const VirtualSpace vs = load_run_surrogate(paths, cfg);
  std::vector<std::string> variants = pure_variants(cfg);
  for (const auto& b : baseline_variants()) variants.push_back(b);
  std::mutex mu;
  parallel_for(variants.size(), [&](std::size_t i) {
    cmd_train(cfg, root, variants[i], std::nullopt, &vs);
    if (log) {
      std::lock_guard lock(mu);
      *log << "trained " << variants[i] << "\n";
    }
  });
  for (const auto& c : combination_variants(cfg)) cmd_combine(cfg, root, c);
  std::vector<std::string> all = variants;
  for (const auto& c : combination_variants(cfg)) all.push_back(c);
  for (const auto& v : all) {
    const auto m = cmd_evaluate(cfg, root, v);
    if (log) *log << v << ": objective " << fmt(m.objective) << ", total benefits " << fmt(m.total_benefits) << "\n";
  }
}

inline std::vector<fs::path> run_pipeline(const ExperimentConfig& cfg, const fs::path& root,
                                          ProgressSink log = nullptr) {
  cmd_gen_data(cfg, root, log);
  cmd_train_surrogate(cfg, root, std::nullopt, log);
  train_all(cfg, root, log);
  return cmd_report(root);
}

}  // namespace rvl
