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

// Real and virtual environments seen by the agents. Both emit the discrete
// state of the last control step and its reward.

#pragma once

#include <utility>

#include "rvl/mdp.hpp"
#include "rvl/reactor.hpp"
#include "rvl/surrogate.hpp"

namespace rvl {

struct Transition {
  DiscreteState state;
  double reward = 0.0;
};

// The simulated reactor, advanced one control interval at a time.
class RealEnv {
 public:
  struct State {
    ReactorState x = initial_state();
    int t = 0;
  };

  RealEnv(KineticsParams params, MdpConfig mdp) : params_(params), mdp_(mdp) {}

  State reset() const { return {}; }
  int horizon() const { return static_cast<int>(params_.control_steps()); }
  const KineticsParams& params() const { return params_; }
  const MdpConfig& mdp() const { return mdp_; }

  // Returns the transition and the feed actually applied after the cap.
  std::pair<Transition, double> step(State& st, ControlAction a) const {
    const double u = apply_volume_cap(st.x, a.feed(), params_);
    const ReactorState next = integrate_step(st.x, u, params_);
    const DiscreteState s = encode_state(next.c - st.x.c, next.d - st.x.d, mdp_.edges);
    st.x = next;
    ++st.t;
    return {{s, reward(s, mdp_.rewards)}, u};
  }

 private:
  KineticsParams params_;
  MdpConfig mdp_;
};

// The learned virtual space with volume bookkeeping; the volume is exact
// because dV/dt = u.
class VirtualEnv {
 public:
  struct Carry {
    VirtualCarry model;
    double v = initial_state().v;
    int t = 0;
  };

  VirtualEnv(const VirtualSpace& vs, KineticsParams params, MdpConfig mdp)
      : vs_(&vs), params_(params), mdp_(mdp) {}

  Carry reset() const {
    const auto x0 = initial_state();
    return {vs_->reset(x0.c, x0.d), x0.v, 0};
  }
  int horizon() const { return static_cast<int>(params_.control_steps()); }
  const MdpConfig& mdp() const { return mdp_; }
  const VirtualSpace& space() const { return *vs_; }

  double capped_feed(const Carry& c, ControlAction a) const {
    ReactorState probe;
    probe.v = c.v;
    return apply_volume_cap(probe, a.feed(), params_);
  }

  std::pair<DiscreteState, Carry> step(Carry c, ControlAction a) const {
    const double u = capped_feed(c, a);
    const double c_prev = c.model.c_prev;
    const double d_prev = c.model.d_prev;
    auto [y, next] = vs_->step(std::move(c.model), u);
    c.model = std::move(next);
    c.v += u * params_.dt_control;
    ++c.t;
    return {encode_state(y.c - c_prev, y.d - d_prev, mdp_.edges), std::move(c)};
  }

  // Advances the shadow carry with a feed applied to the real process and
  // replaces the fed-back values with the measured concentrations.
  void shadow(Carry& c, double u, double c_meas, double d_meas) const {
    auto [y, next] = vs_->step(std::move(c.model), u);
    (void)y;
    c.model = std::move(next);
    VirtualSpace::observe(c.model, c_meas, d_meas);
    c.v += u * params_.dt_control;
    ++c.t;
  }

 private:
  const VirtualSpace* vs_;
  KineticsParams params_;
  MdpConfig mdp_;
};

}  // namespace rvl
