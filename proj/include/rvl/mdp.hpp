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

// Discrete decision problem shared by every agent: state bins over the
// one-step change of [C] - [D], the nine feed levels, and the per-state reward.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "rvl/error.hpp"
#include "rvl/rng.hpp"

namespace rvl {

inline constexpr int kNumStates = 10;
inline constexpr int kNumActions = 9;
inline constexpr double kFeedStep = 0.001;

// S1 (best) .. S10 (worst), 1-based like the state table.
class DiscreteState {
 public:
  constexpr explicit DiscreteState(int index = kNumStates) : index_(index) {
    if (index < 1 || index > kNumStates) throw Error("state index out of range");
  }
  constexpr int index() const { return index_; }
  constexpr std::size_t row() const { return static_cast<std::size_t>(index_ - 1); }
  friend constexpr bool operator==(DiscreteState, DiscreteState) = default;

 private:
  int index_;
};

// Feed level 1..9, u = 0.001 * index.
class ControlAction {
 public:
  constexpr explicit ControlAction(int index = 1) : index_(index) {
    if (index < 1 || index > kNumActions) throw Error("action index out of range");
  }
  constexpr int index() const { return index_; }
  constexpr std::size_t col() const { return static_cast<std::size_t>(index_ - 1); }
  constexpr double feed() const { return kFeedStep * index_; }
  friend constexpr bool operator==(ControlAction, ControlAction) = default;

 private:
  int index_;
};

inline ControlAction feed_to_action(double u) {
  const long idx = std::lround(u / kFeedStep);
  if (idx < 1 || idx > kNumActions || std::abs(u - kFeedStep * idx) > 1e-12)
    throw Error("feed rate " + std::to_string(u) + " is not on the action grid");
  return ControlAction(static_cast<int>(idx));
}

inline double action_to_feed(ControlAction a) { return a.feed(); }

struct MultiStepAction {
  ControlAction action;
  int m = 1;  // hold duration in control steps
  int k = 0;  // 0-based period index
};

// Lower edges of S9, S8, ..., S1. Values below edges[0] map to S10.
using BinEdges = std::array<double, kNumStates - 1>;

inline constexpr BinEdges kDefaultBinEdges = {0.0,    0.0001, 0.0002, 0.0003, 0.0004,
                                              0.0005, 0.0006, 0.0007, 0.0008};

using RewardTable = std::array<double, kNumStates>;

inline constexpr RewardTable kDefaultRewards = {100, 90, 80, 70, 60, 50, 40, 30, 10, -50};

struct MdpConfig {
  BinEdges edges = kDefaultBinEdges;
  RewardTable rewards = kDefaultRewards;
  int m_max = 10;
  int period_length = 30;

  void validate() const {
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (!(edges[i] > edges[i - 1])) throw ConfigError("bin edges must be strictly increasing");
    for (std::size_t i = 1; i < rewards.size(); ++i)
      if (!(rewards[i] < rewards[i - 1]))
        throw ConfigError("reward table must be strictly decreasing from S1 to S10");
    if (m_max < 1) throw ConfigError("m_max must be >= 1");
    if (period_length < 1) throw ConfigError("period_length must be >= 1");
  }
};

// Bins x = delta_c - delta_d; intervals are lower-inclusive.
inline DiscreteState encode_state(double delta_c, double delta_d,
                                  const BinEdges& edges = kDefaultBinEdges) {
  const double x = delta_c - delta_d;
  if (!(x >= edges[0])) return DiscreteState(kNumStates);
  std::size_t i = edges.size() - 1;
  while (x < edges[i]) --i;
  return DiscreteState(kNumStates - 1 - static_cast<int>(i));
}

inline double reward(DiscreteState s, const RewardTable& table = kDefaultRewards) {
  return table[s.row()];
}

// Hold duration uniform on {1..min(m_max, remaining)}.
inline int sample_multistep(Rng& rng, int remaining_steps, int m_max = 10) {
  if (remaining_steps < 1) throw Error("remaining_steps must be >= 1");
  return uniform_int(rng, 1, std::min(m_max, remaining_steps));
}

inline int period_index(int t, int period_length = 30) { return t / period_length; }

inline double episode_return(std::span<const double> rewards, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must lie in (0, 1]");
  double total = 0.0;
  double w = 1.0;
  for (double r : rewards) {
    total += w * r;
    w *= gamma;
  }
  return total;
}

}  // namespace rvl
