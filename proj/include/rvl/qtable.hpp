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

// Tabular action values over the 10 x 9 state/action grid and the update
// rules used by the virtual, real and baseline learners.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rvl/mdp.hpp"
#include "rvl/rng.hpp"

namespace rvl {

class QTable {
 public:
  using Values = std::array<double, kNumStates * kNumActions>;

  double& operator()(DiscreteState s, ControlAction a) { return values_[at(s, a)]; }
  double operator()(DiscreteState s, ControlAction a) const { return values_[at(s, a)]; }

  std::uint64_t visits(DiscreteState s, ControlAction a) const { return visits_[at(s, a)]; }
  void record_visit(DiscreteState s, ControlAction a) { ++visits_[at(s, a)]; }

  const Values& values() const { return values_; }
  Values& values() { return values_; }
  const std::array<std::uint64_t, kNumStates * kNumActions>& visit_counts() const { return visits_; }
  std::array<std::uint64_t, kNumStates * kNumActions>& visit_counts() { return visits_; }

  double max_value(DiscreteState s) const {
    const auto* row = &values_[s.row() * kNumActions];
    return *std::max_element(row, row + kNumActions);
  }

  // Highest-valued action; ties go to the lowest index.
  ControlAction greedy(DiscreteState s) const {
    const auto* row = &values_[s.row() * kNumActions];
    return ControlAction(static_cast<int>(std::max_element(row, row + kNumActions) - row) + 1);
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  static std::size_t at(DiscreteState s, ControlAction a) { return s.row() * kNumActions + a.col(); }

  Values values_{};
  std::array<std::uint64_t, kNumStates * kNumActions> visits_{};
};

// With probability epsilon the greedy action, otherwise uniform over all nine.
inline ControlAction epsilon_greedy(const QTable& q, DiscreteState s, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return q.greedy(s);
  return ControlAction(uniform_int(rng, 1, kNumActions));
}

// The k best actions for s in descending value; ties by lowest index.
inline std::vector<ControlAction> top_k_actions(const QTable& q, DiscreteState s, int k) {
  if (k < 1 || k > kNumActions) throw Error("top_k must lie in [1, 9]");
  std::array<int, kNumActions> idx{};
  std::iota(idx.begin(), idx.end(), 1);
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
    return q(s, ControlAction(x)) > q(s, ControlAction(y));
  });
  std::vector<ControlAction> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.emplace_back(idx[static_cast<std::size_t>(i)]);
  return out;
}

// Moves q(s, a) a fraction alpha toward `target`.
inline void move_toward(QTable& q, DiscreteState s, ControlAction a, double target, double alpha) {
  double& cell = q(s, a);
  cell += alpha * (target - cell);
  q.record_visit(s, a);
}

// Virtual learner: bootstraps on its own best next value.
inline void update_virtual_q(QTable& bv, DiscreteState s, ControlAction a, double r,
                             DiscreteState s_next, double alpha, double gamma_v,
                             bool terminal = false) {
  const double boot = terminal ? 0.0 : bv.max_value(s_next);
  move_toward(bv, s, a, r + gamma_v * boot, alpha);
}

// Real learner: bootstraps on the virtual table at the chosen action.
inline void update_real_q(QTable& br, const QTable& lv, DiscreteState s, ControlAction a_best,
                          double r, DiscreteState s_next, double alpha, double gamma_r,
                          bool terminal = false) {
  const double boot = terminal ? 0.0 : lv(s_next, a_best);
  move_toward(br, s, a_best, r + gamma_r * boot, alpha);
}

// Virtual learner after real feedback: bootstraps on the real table.
inline void update_virtual_feedback(QTable& bv, const QTable& lr, DiscreteState s, ControlAction a,
                                    double r, DiscreteState s_next, double alpha, double gamma_v,
                                    bool terminal = false) {
  const double boot = terminal ? 0.0 : lr(s_next, a);
  move_toward(bv, s, a, r + gamma_v * boot, alpha);
}

// Plain Q-learning update used by the baselines.
inline void update_q(QTable& q, DiscreteState s, ControlAction a, double r, DiscreteState s_next,
                     double alpha, double gamma, bool terminal = false) {
  const double boot = terminal ? 0.0 : q.max_value(s_next);
  move_toward(q, s, a, r + gamma * boot, alpha);
}

// Elementwise maximum of two tables.
inline QTable combine_tables(const QTable& x, const QTable& y) {
  QTable out;
  for (std::size_t i = 0; i < out.values().size(); ++i)
    out.values()[i] = std::max(x.values()[i], y.values()[i]);
  return out;
}

}  // namespace rvl
