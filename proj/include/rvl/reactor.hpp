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

// Ground-truth fed-batch reactor: A + B -> C, B + B -> D with B fed over the
// batch. Concentrations in mol/L, volume in m^3, time in minutes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rvl/error.hpp"

namespace rvl {

inline constexpr double kMaxVolume = 1.0;
// Negative concentrations down to this magnitude are integration noise and
// are clamped to zero; anything below is reported as divergence.
inline constexpr double kClampTolerance = 1e-9;

struct ReactorState {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double v = 0.0;

  friend bool operator==(const ReactorState&, const ReactorState&) = default;
};

// Per-minute time derivatives of the five ReactorState fields.
struct ReactorDerivative {
  double da = 0.0;
  double db = 0.0;
  double dc = 0.0;
  double dd = 0.0;
  double dv = 0.0;
};

struct KineticsParams {
  double k1 = 0.5;
  double k2 = 0.5;
  double b_feed = 0.2;
  double t_f = 120.0;
  double dt_control = 1.0;
  int n_substeps = 10;

  std::size_t control_steps() const {
    return static_cast<std::size_t>(std::llround(t_f / dt_control));
  }

  void validate() const {
    if (!(k1 > 0.0) || !(k2 > 0.0)) throw ConfigError("k1 and k2 must be positive");
    if (!(b_feed > 0.0)) throw ConfigError("b_feed must be positive");
    if (!(t_f > 0.0)) throw ConfigError("t_f must be positive");
    if (!(dt_control > 0.0)) throw ConfigError("dt_control must be positive");
    const double ratio = t_f / dt_control;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
      throw ConfigError("dt_control must divide t_f exactly");
    if (n_substeps < 1) throw ConfigError("n_substeps must be >= 1");
  }
};

inline ReactorState initial_state() { return {0.2, 0.0, 0.0, 0.0, 0.5}; }

struct Trajectory {
  std::vector<ReactorState> states;  // control_steps + 1 entries
  std::vector<double> controls;      // effective feed per interval

  const ReactorState& final_state() const { return states.back(); }
};

// Material balances with mass-action kinetics. dC carries +k1*a*b: C is the
// product of A + B. dD keeps the 2*k2*b^2 production term.
inline ReactorDerivative derivatives(const ReactorState& s, double u,
                                     const KineticsParams& p) {
  if (!(s.v > 0.0)) throw DegenerateVolumeError("reactor volume must be positive");
  const double r1 = p.k1 * s.a * s.b;
  const double r2 = 2.0 * p.k2 * s.b * s.b;
  const double dilution = u / s.v;
  return {-r1 - s.a * dilution,
          -r1 - r2 + (p.b_feed - s.b) * dilution,
          r1 - s.c * dilution,
          r2 - s.d * dilution,
          u};
}

namespace detail {

inline ReactorState axpy(const ReactorState& s, double h, const ReactorDerivative& k) {
  return {s.a + h * k.da, s.b + h * k.db, s.c + h * k.dc, s.d + h * k.dd, s.v + h * k.dv};
}

inline bool all_finite(const ReactorState& s) {
  return std::isfinite(s.a) && std::isfinite(s.b) && std::isfinite(s.c) &&
         std::isfinite(s.d) && std::isfinite(s.v);
}

inline void clamp_concentration(double& x, const char* name) {
  if (x >= 0.0) return;
  if (x < -kClampTolerance)
    throw IntegrationDivergedError(std::string("negative concentration of ") + name);
  x = 0.0;
}

}  // namespace detail

// Classical RK4 over one control interval, n_substeps equal substeps.
inline ReactorState integrate_step(const ReactorState& state, double u,
                                   const KineticsParams& p) {
  const double h = p.dt_control / p.n_substeps;
  ReactorState s = state;
  for (int i = 0; i < p.n_substeps; ++i) {
    const auto k1 = derivatives(s, u, p);
    const auto k2 = derivatives(detail::axpy(s, 0.5 * h, k1), u, p);
    const auto k3 = derivatives(detail::axpy(s, 0.5 * h, k2), u, p);
    const auto k4 = derivatives(detail::axpy(s, h, k3), u, p);
    s.a += h / 6.0 * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
    s.b += h / 6.0 * (k1.db + 2.0 * k2.db + 2.0 * k3.db + k4.db);
    s.c += h / 6.0 * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc);
    s.d += h / 6.0 * (k1.dd + 2.0 * k2.dd + 2.0 * k3.dd + k4.dd);
    s.v += h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    if (!detail::all_finite(s)) throw IntegrationDivergedError("non-finite reactor state");
  }
  detail::clamp_concentration(s.a, "A");
  detail::clamp_concentration(s.b, "B");
  detail::clamp_concentration(s.c, "C");
  detail::clamp_concentration(s.d, "D");
  return s;
}

// Largest feed not exceeding u that keeps the volume at or below the cap.
inline double apply_volume_cap(const ReactorState& s, double u, const KineticsParams& p) {
  if (s.v + u * p.dt_control <= kMaxVolume) return u;
  return std::max(0.0, (kMaxVolume - s.v) / p.dt_control);
}

// Controller signature: (step index, current state) -> requested feed rate.
using Controller = std::function<double(std::size_t, const ReactorState&)>;

template <typename RequestFn>
Trajectory simulate_with(RequestFn&& request, const KineticsParams& p,
                         const ReactorState& initial) {
  const std::size_t n = p.control_steps();
  Trajectory traj;
  traj.states.reserve(n + 1);
  traj.controls.reserve(n);
  traj.states.push_back(initial);
  for (std::size_t t = 0; t < n; ++t) {
    const ReactorState& s = traj.states.back();
    const double requested = request(t, s);
    if (!(requested >= 0.0)) throw Error("feed rate must be >= 0 at step " + std::to_string(t));
    const double u = apply_volume_cap(s, requested, p);
    try {
      traj.states.push_back(integrate_step(s, u, p));
    } catch (const IntegrationDivergedError& e) {
      throw IntegrationDivergedError(e.what(), static_cast<std::ptrdiff_t>(t));
    }
    traj.controls.push_back(u);
  }
  return traj;
}

inline Trajectory simulate(std::span<const double> controls, const KineticsParams& p,
                           const ReactorState& initial = initial_state()) {
  if (controls.size() != p.control_steps())
    throw Error("control sequence length " + std::to_string(controls.size()) +
                " does not match " + std::to_string(p.control_steps()) + " control steps");
  return simulate_with([&](std::size_t t, const ReactorState&) { return controls[t]; }, p,
                       initial);
}

inline Trajectory simulate(const Controller& controller, const KineticsParams& p,
                           const ReactorState& initial = initial_state()) {
  return simulate_with(controller, p, initial);
}

inline std::string format_sig10(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// CSV `t,u,A,B,C,D,V`. Row 0 is the initial state with u = 0; row k > 0 holds
// the state at t = k*dt and the feed applied over the interval ending there.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                                 const KineticsParams& p) {
  os << "t,u,A,B,C,D,V\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& s = traj.states[k];
    const double u = k == 0 ? 0.0 : traj.controls[k - 1];
    os << format_sig10(static_cast<double>(k) * p.dt_control) << ',' << format_sig10(u) << ','
       << format_sig10(s.a) << ',' << format_sig10(s.b) << ',' << format_sig10(s.c) << ','
       << format_sig10(s.d) << ',' << format_sig10(s.v) << '\n';
  }
}

}  // namespace rvl
