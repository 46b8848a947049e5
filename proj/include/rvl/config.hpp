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

// Experiment configuration: one JSON document holding every knob of the
// pipeline. Unknown keys are rejected and every section is validated on load.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvl/agents.hpp"
#include "rvl/dataset.hpp"
#include "rvl/error.hpp"
#include "rvl/mdp.hpp"
#include "rvl/provenance.hpp"
#include "rvl/reactor.hpp"
#include "rvl/rng.hpp"
#include "rvl/surrogate.hpp"

namespace rvl {

struct DatasetConfig {
  std::size_t n = 20000;
  std::size_t train_n = 15000;
  ExcitationSpec excitation;
};

// Surrogate hyperparameters without seeds; seeds derive from the master seed.
struct SurrogateConfig {
  TrainingConfig c{100, 20, 3000, 1e-3, 1.0, OptimizerKind::kAdam, 0.08, 1.0, 0};
  TrainingConfig d{200, 20, 6000, 1e-3, 1.0, OptimizerKind::kAdam, 0.08, 1.0, 0};
  Normalization normalization;
};

struct SightConfig {
  int short_sight = 1;
  std::vector<int> immediate = {30, 50, 80};
  int long_sight = 120;
  int combination_immediate = 50;  // immediate sight used in the combinations
};

struct ExperimentConfig {
  std::uint64_t master_seed = 2024;
  std::string output_dir = "runs/default";
  KineticsParams reactor;
  DatasetConfig dataset;
  SurrogateConfig surrogate;
  MdpConfig mdp;
  RVLConfig agent;  // n_sight and seed are set per variant
  SightConfig sights;
  TabularConfig baselines;

  void validate() const {
    reactor.validate();
    if (dataset.n < 1) throw ConfigError("dataset.n must be >= 1");
    if (dataset.train_n >= dataset.n) throw ConfigError("dataset.train_n must be < dataset.n");
    if (dataset.excitation.min_segment < 1 ||
        dataset.excitation.max_segment < dataset.excitation.min_segment)
      throw ConfigError("dataset.excitation segment bounds are invalid");
    surrogate.c.validate();
    surrogate.d.validate();
    mdp.validate();
    agent.validate();
    baselines.validate();
    auto check_sight = [](int n, const char* what) {
      if (n < 1 || n > 120) throw ConfigError(std::string("sights.") + what + " must lie in [1, 120]");
    };
    check_sight(sights.short_sight, "short");
    check_sight(sights.long_sight, "long");
    check_sight(sights.combination_immediate, "combination_immediate");
    for (int n : sights.immediate) check_sight(n, "immediate");
  }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!ok.count(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("invalid value for '" + where + "." + key + "'");
  }
}

inline void read_training(const nlohmann::json& j, TrainingConfig& c, const std::string& where) {
  require_keys(j,
               {"hidden_size", "mini_batch", "epochs", "learning_rate", "clip_norm", "optimizer",
                "init_scale", "forget_bias"},
               where);
  read(j, "hidden_size", c.hidden_size, where);
  read(j, "mini_batch", c.mini_batch, where);
  read(j, "epochs", c.epochs, where);
  read(j, "learning_rate", c.learning_rate, where);
  read(j, "clip_norm", c.clip_norm, where);
  read(j, "init_scale", c.init_scale, where);
  read(j, "forget_bias", c.forget_bias, where);
  if (j.contains("optimizer")) c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
}

inline nlohmann::json training_to_json(const TrainingConfig& c) {
  auto j = to_json(c);
  j.erase("seed");
  return j;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  using detail::require_keys;
  ExperimentConfig cfg;
  require_keys(j,
               {"master_seed", "output_dir", "reactor", "dataset", "surrogate", "mdp", "agent",
                "sights", "baselines"},
               "config");
  read(j, "master_seed", cfg.master_seed, "config");
  read(j, "output_dir", cfg.output_dir, "config");
  if (j.contains("reactor")) {
    const auto& r = j.at("reactor");
    require_keys(r, {"k1", "k2", "b_feed", "t_f", "dt_control", "n_substeps"}, "reactor");
    read(r, "k1", cfg.reactor.k1, "reactor");
    read(r, "k2", cfg.reactor.k2, "reactor");
    read(r, "b_feed", cfg.reactor.b_feed, "reactor");
    read(r, "t_f", cfg.reactor.t_f, "reactor");
    read(r, "dt_control", cfg.reactor.dt_control, "reactor");
    read(r, "n_substeps", cfg.reactor.n_substeps, "reactor");
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    require_keys(d, {"n", "train_n", "excitation"}, "dataset");
    read(d, "n", cfg.dataset.n, "dataset");
    read(d, "train_n", cfg.dataset.train_n, "dataset");
    if (d.contains("excitation")) {
      const auto& e = d.at("excitation");
      require_keys(e, {"kind", "min_segment", "max_segment", "constant_feed"}, "dataset.excitation");
      if (e.contains("kind"))
        cfg.dataset.excitation.kind = excitation_kind_from_name(e.at("kind").get<std::string>());
      read(e, "min_segment", cfg.dataset.excitation.min_segment, "dataset.excitation");
      read(e, "max_segment", cfg.dataset.excitation.max_segment, "dataset.excitation");
      read(e, "constant_feed", cfg.dataset.excitation.constant_feed, "dataset.excitation");
    }
  }
  if (j.contains("surrogate")) {
    const auto& s = j.at("surrogate");
    require_keys(s, {"c", "d", "normalization"}, "surrogate");
    if (s.contains("c")) detail::read_training(s.at("c"), cfg.surrogate.c, "surrogate.c");
    if (s.contains("d")) detail::read_training(s.at("d"), cfg.surrogate.d, "surrogate.d");
    if (s.contains("normalization")) {
      const auto& n = s.at("normalization");
      require_keys(n, {"u_scale", "y_scale", "y_offset"}, "surrogate.normalization");
      read(n, "u_scale", cfg.surrogate.normalization.u_scale, "surrogate.normalization");
      read(n, "y_scale", cfg.surrogate.normalization.y_scale, "surrogate.normalization");
      read(n, "y_offset", cfg.surrogate.normalization.y_offset, "surrogate.normalization");
    }
  }
  if (j.contains("mdp")) {
    const auto& m = j.at("mdp");
    require_keys(m, {"bin_edges", "rewards", "m_max", "period_length"}, "mdp");
    read(m, "bin_edges", cfg.mdp.edges, "mdp");
    read(m, "rewards", cfg.mdp.rewards, "mdp");
    read(m, "m_max", cfg.mdp.m_max, "mdp");
    read(m, "period_length", cfg.mdp.period_length, "mdp");
  }
  if (j.contains("agent")) {
    const auto& a = j.at("agent");
    require_keys(a,
                 {"alpha", "gamma_v", "gamma_r", "epsilon", "top_k", "schedule_period", "episodes",
                  "bootstrap_next_best"},
                 "agent");
    read(a, "alpha", cfg.agent.alpha, "agent");
    read(a, "gamma_v", cfg.agent.gamma_v, "agent");
    read(a, "gamma_r", cfg.agent.gamma_r, "agent");
    read(a, "epsilon", cfg.agent.epsilon, "agent");
    read(a, "top_k", cfg.agent.top_k, "agent");
    read(a, "schedule_period", cfg.agent.schedule_period, "agent");
    read(a, "episodes", cfg.agent.episodes, "agent");
    read(a, "bootstrap_next_best", cfg.agent.bootstrap_next_best, "agent");
  }
  if (j.contains("sights")) {
    const auto& s = j.at("sights");
    require_keys(s, {"short", "immediate", "long", "combination_immediate"}, "sights");
    read(s, "short", cfg.sights.short_sight, "sights");
    read(s, "immediate", cfg.sights.immediate, "sights");
    read(s, "long", cfg.sights.long_sight, "sights");
    read(s, "combination_immediate", cfg.sights.combination_immediate, "sights");
  }
  if (j.contains("baselines")) {
    const auto& b = j.at("baselines");
    require_keys(b, {"alpha", "gamma", "epsilon", "episodes", "m_max"}, "baselines");
    read(b, "alpha", cfg.baselines.alpha, "baselines");
    read(b, "gamma", cfg.baselines.gamma, "baselines");
    read(b, "epsilon", cfg.baselines.epsilon, "baselines");
    read(b, "episodes", cfg.baselines.episodes, "baselines");
    read(b, "m_max", cfg.baselines.m_max, "baselines");
  }
  cfg.agent.surrogate_epochs = cfg.surrogate.c.epochs;
  cfg.validate();
  return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {
      {"master_seed", cfg.master_seed},
      {"output_dir", cfg.output_dir},
      {"reactor", to_json(cfg.reactor)},
      {"dataset",
       {{"n", cfg.dataset.n},
        {"train_n", cfg.dataset.train_n},
        {"excitation", to_json(cfg.dataset.excitation)}}},
      {"surrogate",
       {{"c", detail::training_to_json(cfg.surrogate.c)},
        {"d", detail::training_to_json(cfg.surrogate.d)},
        {"normalization",
         {{"u_scale", cfg.surrogate.normalization.u_scale},
          {"y_scale", cfg.surrogate.normalization.y_scale},
          {"y_offset", cfg.surrogate.normalization.y_offset}}}}},
      {"mdp",
       {{"bin_edges", cfg.mdp.edges},
        {"rewards", cfg.mdp.rewards},
        {"m_max", cfg.mdp.m_max},
        {"period_length", cfg.mdp.period_length}}},
      {"agent",
       {{"alpha", cfg.agent.alpha},
        {"gamma_v", cfg.agent.gamma_v},
        {"gamma_r", cfg.agent.gamma_r},
        {"epsilon", cfg.agent.epsilon},
        {"top_k", cfg.agent.top_k},
        {"schedule_period", cfg.agent.schedule_period},
        {"episodes", cfg.agent.episodes},
        {"bootstrap_next_best", cfg.agent.bootstrap_next_best}}},
      {"sights",
       {{"short", cfg.sights.short_sight},
        {"immediate", cfg.sights.immediate},
        {"long", cfg.sights.long_sight},
        {"combination_immediate", cfg.sights.combination_immediate}}},
      {"baselines",
       {{"alpha", cfg.baselines.alpha},
        {"gamma", cfg.baselines.gamma},
        {"epsilon", cfg.baselines.epsilon},
        {"episodes", cfg.baselines.episodes},
        {"m_max", cfg.baselines.m_max}}},
  };
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// Hash of the resolved configuration; the output directory is excluded so a
// run can be moved or re-rooted.
inline std::string config_hash(const ExperimentConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

inline Provenance provenance_of(const ExperimentConfig& cfg) {
  return {config_hash(cfg), cfg.master_seed};
}

// Per-purpose seeds derived from the master seed.
inline std::uint64_t stream_seed(const ExperimentConfig& cfg, std::string_view purpose) {
  return derive_seed(cfg.master_seed, purpose);
}

}  // namespace rvl
