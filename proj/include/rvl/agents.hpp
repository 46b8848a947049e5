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

// Learning and control algorithms: the alternating virtual/real trainer with
// N-step lookahead, the sight combination, the tabular baselines and the
// greedy evaluation used for every control table.

#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rvl/environment.hpp"
#include "rvl/error.hpp"
#include "rvl/mdp.hpp"
#include "rvl/qtable.hpp"
#include "rvl/reactor.hpp"
#include "rvl/rng.hpp"

namespace rvl {

struct RVLConfig {
  double alpha = 0.1;
  double gamma_v = 0.7;
  double gamma_r = 0.98;
  double epsilon = 0.7;  // probability of exploiting
  int top_k = 3;
  int n_sight = 1;
  int schedule_period = 10;  // every p-th iteration is a real episode
  int episodes = 5000;       // total iterations O
  int surrogate_epochs = 3000;
  // When set, the real update bootstraps on the best virtual value of the
  // next state and the feedback update on the best real value, instead of
  // both tables' value at the action just taken. With it off, untried
  // actions keep a zero bootstrap and the greedy policy settles on action 1.
  bool bootstrap_next_best = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(gamma_v > 0.0 && gamma_v < 1.0)) throw ConfigError("gamma_v must lie in (0, 1)");
    if (!(gamma_r > 0.0 && gamma_r < 1.0)) throw ConfigError("gamma_r must lie in (0, 1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (top_k < 1 || top_k > kNumActions) throw ConfigError("top_k must lie in [1, 9]");
    if (n_sight < 1 || n_sight > 120) throw ConfigError("n_sight must lie in [1, 120]");
    if (schedule_period < 1) throw ConfigError("schedule_period must be >= 1");
    if (episodes < 0) throw ConfigError("episodes must be >= 0");
    if (surrogate_epochs < 1) throw ConfigError("surrogate_epochs must be >= 1");
  }
};

struct SightPolicy {
  QTable virtual_table;
  QTable real_table;
  int n_sight = 1;
};

struct CombinedPolicy {
  QTable values;
};

enum class EpisodeKind { kVirtual, kReal };

inline const char* episode_kind_name(EpisodeKind k) {
  return k == EpisodeKind::kReal ? "real" : "virtual";
}

struct LogEntry {
  int iteration = 0;
  EpisodeKind kind = EpisodeKind::kVirtual;
  double episode_return = 0.0;
};

struct TrainingLog {
  std::vector<LogEntry> entries;
  std::size_t self_bootstrap_updates = 0;  // virtual updates on its own max
  std::size_t feedback_updates = 0;        // virtual updates on the real table
  std::size_t real_updates = 0;
  std::size_t virtual_steps = 0;           // surrogate steps, lookahead included
};

struct RVLResult {
  SightPolicy policy;
  TrainingLog log;
};

// ---- lookahead -------------------------------------------------------------

// A transition model the lookahead can fork: copies of Carry are independent.
template <typename M>
concept LookaheadModel = requires(const M& m, typename M::Carry c, ControlAction a) {
  { m.step(c, a) } -> std::convertible_to<std::pair<DiscreteState, typename M::Carry>>;
};

struct LookaheadResult {
  ControlAction action;
  double value = 0.0;  // current reward plus rewards of the visited states
  std::size_t candidate_index = 0;
  std::size_t virtual_steps = 0;
};

// Scores each candidate by applying it once and then following the greedy
// action of `bv` for min(n_sight, remaining) steps in total. Rewards are
// summed without discount. Ties go to the earliest candidate.
template <LookaheadModel M>
LookaheadResult lookahead_select(const M& model, const QTable& bv, const typename M::Carry& carry,
                                 std::span<const ControlAction> candidates, int n_sight,
                                 const RewardTable& rewards, double current_reward = 0.0,
                                 int remaining = std::numeric_limits<int>::max()) {
  if (candidates.empty()) throw Error("lookahead needs at least one candidate");
  if (n_sight < 1) throw Error("n_sight must be >= 1");
  const int depth = std::max(1, std::min(n_sight, remaining));
  LookaheadResult best{candidates.front(), -std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double total = current_reward;
    try {
      auto [s, c] = model.step(carry, candidates[i]);
      total += reward(s, rewards);
      for (int n = 1; n < depth; ++n) {
        auto [s2, c2] = model.step(std::move(c), bv.greedy(s));
        s = s2;
        c = std::move(c2);
        total += reward(s, rewards);
      }
    } catch (const Error& e) {
      throw Error("lookahead candidate " + std::to_string(i) + ": " + e.what());
    }
    best.virtual_steps += static_cast<std::size_t>(depth);
    if (total > best.value) {
      best.value = total;
      best.action = candidates[i];
      best.candidate_index = i;
    }
  }
  return best;
}

// ---- alternating virtual / real training ----------------------------------

namespace detail {

inline DiscreteState start_state(const MdpConfig& mdp) {
  return encode_state(0.0, 0.0, mdp.edges);
}

// One episode against the virtual space. Before the first real episode the
// virtual table bootstraps on itself, afterwards on the real table.
inline double virtual_episode(const VirtualEnv& venv, QTable& bv, const QTable& br,
                              const RVLConfig& cfg, bool feedback, Rng& rng, TrainingLog& log) {
  const MdpConfig& mdp = venv.mdp();
  const int horizon = venv.horizon();
  auto carry = venv.reset();
  DiscreteState s = start_state(mdp);
  double total = 0.0;
  for (int t = 0; t < horizon;) {
    MultiStepAction act;
    act.m = sample_multistep(rng, horizon - t, mdp.m_max);
    act.k = period_index(t, mdp.period_length);
    act.action = epsilon_greedy(bv, s, cfg.epsilon, rng);
    double r = 0.0;
    DiscreteState next = s;
    for (int i = 0; i < act.m; ++i) {
      auto [s2, c2] = venv.step(std::move(carry), act.action);
      carry = std::move(c2);
      next = s2;
      r += reward(next, mdp.rewards);
    }
    log.virtual_steps += static_cast<std::size_t>(act.m);
    t += act.m;
    const bool terminal = t >= horizon;
    if (feedback && cfg.bootstrap_next_best) {
      const double boot = terminal ? 0.0 : br.max_value(next);
      move_toward(bv, s, act.action, r + cfg.gamma_v * boot, cfg.alpha);
      ++log.feedback_updates;
    } else if (feedback) {
      update_virtual_feedback(bv, br, s, act.action, r, next, cfg.alpha, cfg.gamma_v, terminal);
      ++log.feedback_updates;
    } else {
      update_virtual_q(bv, s, act.action, r, next, cfg.alpha, cfg.gamma_v, terminal);
      ++log.self_bootstrap_updates;
    }
    total += r;
    s = next;
  }
  return total;
}

// One episode on the reactor. The virtual space shadows the process so the
// lookahead forks from the measured state.
inline double real_episode(const RealEnv& renv, const VirtualEnv& venv, const QTable& bv,
                           QTable& br, const RVLConfig& cfg, Rng& rng, TrainingLog& log) {
  const MdpConfig& mdp = renv.mdp();
  const int horizon = renv.horizon();
  auto st = renv.reset();
  auto shadow = venv.reset();
  DiscreteState s = start_state(mdp);
  double total = 0.0;
  for (int t = 0; t < horizon;) {
    MultiStepAction act;
    act.m = sample_multistep(rng, horizon - t, mdp.m_max);
    act.k = period_index(t, mdp.period_length);
    const auto candidates = top_k_actions(bv, s, cfg.top_k);
    const auto best = lookahead_select(venv, bv, shadow, candidates, cfg.n_sight, mdp.rewards,
                                       reward(s, mdp.rewards), horizon - t);
    log.virtual_steps += best.virtual_steps;
    act.action = best.action;
    double r = 0.0;
    DiscreteState next = s;
    for (int i = 0; i < act.m; ++i) {
      const auto [tr, u] = renv.step(st, act.action);
      venv.shadow(shadow, u, st.x.c, st.x.d);
      next = tr.state;
      r += tr.reward;
    }
    t += act.m;
    const bool terminal = t >= horizon;
    if (cfg.bootstrap_next_best) {
      const double boot = terminal ? 0.0 : bv.max_value(next);
      move_toward(br, s, act.action, r + cfg.gamma_r * boot, cfg.alpha);
    } else {
      update_real_q(br, bv, s, act.action, r, next, cfg.alpha, cfg.gamma_r, terminal);
    }
    ++log.real_updates;
    total += r;
    s = next;
  }
  return total;
}

}  // namespace detail

// Iterations J = 1..O: J mod p != 0 runs a virtual episode, J mod p == 0 a
// real one. The surrogate behind `venv` must already be trained.
inline RVLResult train_rvl(const RealEnv& renv, const VirtualEnv& venv, const RVLConfig& cfg) {
  cfg.validate();
  RVLResult out;
  out.policy.n_sight = cfg.n_sight;
  QTable& bv = out.policy.virtual_table;
  QTable& br = out.policy.real_table;
  Rng rng(cfg.seed);
  out.log.entries.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int j = 1; j <= cfg.episodes; ++j) {
    try {
      if (j % cfg.schedule_period != 0) {
        const bool feedback = j >= cfg.schedule_period;
        const double ret = detail::virtual_episode(venv, bv, br, cfg, feedback, rng, out.log);
        out.log.entries.push_back({j, EpisodeKind::kVirtual, ret});
      } else {
        const double ret = detail::real_episode(renv, venv, bv, br, cfg, rng, out.log);
        out.log.entries.push_back({j, EpisodeKind::kReal, ret});
      }
    } catch (const Error& e) {
      throw Error("training iteration " + std::to_string(j) + ": " + e.what());
    }
  }
  return out;
}

// Elementwise maximum of the two sights' real tables.
inline CombinedPolicy combine_policies(const SightPolicy& short_sight, const SightPolicy& long_sight) {
  return {combine_tables(short_sight.real_table, long_sight.real_table)};
}

// ---- tabular baselines -----------------------------------------------------

struct TabularConfig {
  double alpha = 0.1;
  double gamma = 0.98;
  double epsilon = 0.7;
  int episodes = 5000;
  int m_max = 10;  // hold-duration bound for the multi-step baseline
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (episodes < 0) throw ConfigError("episodes must be >= 0");
    if (m_max < 1) throw ConfigError("m_max must be >= 1");
  }
};

struct TabularResult {
  QTable table;
  std::vector<double> returns;  // per training episode
};

// epsilon-greedy Q-learning on the reactor; each chosen action is held for a
// duration drawn from {1..min(m_max, remaining)}.
inline TabularResult train_tabular(const RealEnv& renv, const TabularConfig& cfg, int m_max) {
  cfg.validate();
  const MdpConfig& mdp = renv.mdp();
  const int horizon = renv.horizon();
  TabularResult out;
  out.returns.reserve(static_cast<std::size_t>(cfg.episodes));
  Rng rng(cfg.seed);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    auto st = renv.reset();
    DiscreteState s = detail::start_state(mdp);
    double total = 0.0;
    for (int t = 0; t < horizon;) {
      const int m = sample_multistep(rng, horizon - t, m_max);
      const ControlAction a = epsilon_greedy(out.table, s, cfg.epsilon, rng);
      double r = 0.0;
      DiscreteState next = s;
      for (int i = 0; i < m; ++i) {
        const auto tr = renv.step(st, a).first;
        next = tr.state;
        r += tr.reward;
      }
      t += m;
      update_q(out.table, s, a, r, next, cfg.alpha, cfg.gamma, t >= horizon);
      total += r;
      s = next;
    }
    out.returns.push_back(total);
  }
  return out;
}

inline TabularResult train_q_learning(const RealEnv& renv, const TabularConfig& cfg) {
  return train_tabular(renv, cfg, 1);
}

inline TabularResult train_smsa(const RealEnv& renv, const TabularConfig& cfg) {
  return train_tabular(renv, cfg, cfg.m_max);
}

// ---- evaluation ------------------------------------------------------------

struct ControlMetrics {
  double c = 0.0;
  double d = 0.0;
  double v = 0.0;
  double c_minus_d = 0.0;
  double objective = 0.0;       // ([C] - [D]) * [V]
  double total_benefits = 0.0;  // undiscounted reward sum
  std::vector<double> rewards;  // per control step
  std::vector<int> states;      // discrete state index per control step
  Trajectory trajectory;
};

inline ControlMetrics metrics_from_final(const ReactorState& x) {
  ControlMetrics m;
  m.c = x.c;
  m.d = x.d;
  m.v = x.v;
  m.c_minus_d = x.c - x.d;
  m.objective = m.c_minus_d * x.v;
  return m;
}

// One deterministic episode acting greedily on `table` at every control step.
inline ControlMetrics evaluate_policy(const QTable& table, const RealEnv& renv) {
  const MdpConfig& mdp = renv.mdp();
  auto st = renv.reset();
  DiscreteState s = detail::start_state(mdp);
  Trajectory traj;
  traj.states.push_back(st.x);
  std::vector<double> rewards;
  std::vector<int> states;
  for (int t = 0; t < renv.horizon(); ++t) {
    const auto [tr, u] = renv.step(st, table.greedy(s));
    traj.states.push_back(st.x);
    traj.controls.push_back(u);
    rewards.push_back(tr.reward);
    states.push_back(tr.state.index());
    s = tr.state;
  }
  ControlMetrics m = metrics_from_final(st.x);
  m.total_benefits = episode_return(rewards, 1.0);
  m.rewards = std::move(rewards);
  m.states = std::move(states);
  m.trajectory = std::move(traj);
  return m;
}

}  // namespace rvl
