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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rvl/reactor.hpp"
#include "rvl/rng.hpp"
#include "reactor_oracle.hpp"

namespace {

using rvl::KineticsParams;
using rvl::ReactorState;

TEST(Derivatives, NoBNoFeedIsStationary) {
  const auto d = rvl::derivatives({0.2, 0.0, 0.0, 0.0, 0.5}, 0.0, KineticsParams{});
  EXPECT_EQ(d.da, 0.0);
  EXPECT_EQ(d.db, 0.0);
  EXPECT_EQ(d.dc, 0.0);
  EXPECT_EQ(d.dd, 0.0);
  EXPECT_EQ(d.dv, 0.0);
}

TEST(Derivatives, FeedOnlyDilutesAndAddsB) {
  // dA = -(0.2/0.5)*0.005, dB = (0.2/0.5)*0.005, dV = u.
  const auto d = rvl::derivatives({0.2, 0.0, 0.0, 0.0, 0.5}, 0.005, KineticsParams{});
  EXPECT_NEAR(d.da, -0.002, 1e-15);
  EXPECT_NEAR(d.db, 0.002, 1e-15);
  EXPECT_EQ(d.dc, 0.0);
  EXPECT_EQ(d.dd, 0.0);
  EXPECT_EQ(d.dv, 0.005);
}

TEST(Derivatives, ReactionTermsWithoutFeed) {
  // k1*a*b = 0.005, 2*k2*b^2 = 0.01.
  const auto d = rvl::derivatives({0.1, 0.1, 0.0, 0.0, 0.5}, 0.0, KineticsParams{});
  EXPECT_NEAR(d.da, -0.005, 1e-15);
  EXPECT_NEAR(d.db, -0.015, 1e-15);
  EXPECT_NEAR(d.dc, 0.005, 1e-15);
  EXPECT_NEAR(d.dd, 0.01, 1e-15);
  EXPECT_EQ(d.dv, 0.0);
}

TEST(Derivatives, ZeroVolumeIsAnError) {
  EXPECT_THROW(rvl::derivatives({0.2, 0.0, 0.0, 0.0, 0.0}, 0.0, KineticsParams{}),
               rvl::DegenerateVolumeError);
}

TEST(IntegrateStep, NoFeedKeepsVolume) {
  ReactorState s{0.15, 0.02, 0.03, 0.01, 0.7};
  const auto next = rvl::integrate_step(s, 0.0, KineticsParams{});
  EXPECT_EQ(next.v, 0.7);
}

TEST(IntegrateStep, ConstantFeedGrowsVolumeLinearly) {
  KineticsParams p;
  auto traj = rvl::simulate(std::vector<double>(120, 0.004), p);
  EXPECT_NEAR(traj.final_state().v, 0.98, 1e-12);
}

TEST(IntegrateStep, MatchesFineEulerOracle) {
  KineticsParams p;
  const ReactorState s0 = rvl::initial_state();
  // Run a few intervals first so every reaction term is active.
  ReactorState s = s0;
  for (int i = 0; i < 10; ++i) s = rvl::integrate_step(s, 0.005, p);
  const auto rk4 = rvl::integrate_step(s, 0.005, p);
  const auto euler = rvl::testing::extrapolated_euler(s, 0.005, p, 10000);
  EXPECT_NEAR(rk4.a, euler.a, 1e-8);
  EXPECT_NEAR(rk4.b, euler.b, 1e-8);
  EXPECT_NEAR(rk4.c, euler.c, 1e-8);
  EXPECT_NEAR(rk4.d, euler.d, 1e-8);
  EXPECT_NEAR(rk4.v, euler.v, 1e-8);

  const auto first = rvl::integrate_step(s0, 0.005, p);
  const auto first_euler = rvl::testing::extrapolated_euler(s0, 0.005, p, 10000);
  EXPECT_NEAR(first.b, first_euler.b, 1e-8);
  EXPECT_NEAR(first.c, first_euler.c, 1e-8);
}

TEST(IntegrateStep, ClampsTinyNegativesAndRejectsLargeOnes) {
  KineticsParams p;
  p.n_substeps = 1;
  // A tiny negative input value stays within tolerance and comes back as 0.
  ReactorState tiny{0.2, 0.0, -5e-10, 0.0, 0.5};
  EXPECT_EQ(rvl::integrate_step(tiny, 0.0, p).c, 0.0);
  ReactorState bad{0.2, 0.0, -1e-3, 0.0, 0.5};
  EXPECT_THROW(rvl::integrate_step(bad, 0.0, p), rvl::IntegrationDivergedError);
}

TEST(IntegrateStep, NonFiniteIsDivergence) {
  KineticsParams p;
  p.k1 = 1e300;
  p.k2 = 1e300;
  EXPECT_THROW(rvl::integrate_step({0.2, 0.2, 0.0, 0.0, 0.5}, 0.0, p),
               rvl::IntegrationDivergedError);
}

TEST(VolumeCap, Examples) {
  KineticsParams p;
  ReactorState s = rvl::initial_state();
  EXPECT_EQ(rvl::apply_volume_cap(s, 0.005, p), 0.005);
  s.v = 1.0;
  EXPECT_EQ(rvl::apply_volume_cap(s, 0.009, p), 0.0);
  s.v = 0.9995;
  EXPECT_NEAR(rvl::apply_volume_cap(s, 0.009, p), 0.0005, 1e-15);
}

TEST(Simulate, ZeroControlsLeaveInitialState) {
  KineticsParams p;
  const auto traj = rvl::simulate(std::vector<double>(120, 0.0), p);
  ASSERT_EQ(traj.states.size(), 121u);
  ASSERT_EQ(traj.controls.size(), 120u);
  for (const auto& s : traj.states) EXPECT_EQ(s, rvl::initial_state());
}

TEST(Simulate, ConstantFeedShape) {
  KineticsParams p;
  const auto traj = rvl::simulate(std::vector<double>(120, 0.004167), p);
  EXPECT_NEAR(traj.final_state().v, 1.0, 1e-3);
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    EXPECT_LT(traj.states[t].a, traj.states[t - 1].a) << "t=" << t;
    if (t >= 2) {
      EXPECT_GT(traj.states[t].c, traj.states[t - 1].c) << "t=" << t;
    }
  }
}

TEST(Simulate, LengthMismatchIsAnError) {
  EXPECT_THROW(rvl::simulate(std::vector<double>(5, 0.0), KineticsParams{}), rvl::Error);
}

TEST(Simulate, ControllerCallbackAndCapAtOne) {
  KineticsParams p;
  const auto traj = rvl::simulate(
      rvl::Controller([](std::size_t, const ReactorState&) { return 0.009; }), p);
  double prev = 0.0;
  for (const auto& s : traj.states) {
    EXPECT_GE(s.v, prev);
    EXPECT_LE(s.v, rvl::kMaxVolume + 1e-12);
    prev = s.v;
  }
  EXPECT_NEAR(traj.final_state().v, 1.0, 1e-12);
}

TEST(Simulate, ErrorCarriesStepIndex) {
  KineticsParams p;
  p.k1 = 1e300;
  p.k2 = 1e300;
  std::vector<double> u(120, 0.0);
  u[3] = 0.009;
  try {
    rvl::simulate(u, p);
    FAIL() << "expected divergence";
  } catch (const rvl::IntegrationDivergedError& e) {
    EXPECT_EQ(e.step(), 3);
  }
}

TEST(Simulate, IsDeterministic) {
  rvl::Rng rng(99);
  std::vector<double> u(120);
  for (auto& x : u) x = 0.001 * rvl::uniform_int(rng, 1, 9);
  const auto a = rvl::simulate(u, KineticsParams{});
  const auto b = rvl::simulate(u, KineticsParams{});
  EXPECT_EQ(a.states, b.states);
}

// Mole balances that follow from summing the rate equations.
TEST(ReactorProperties, BalancesHoldOnRandomEpisodes) {
  KineticsParams p;
  const ReactorState s0 = rvl::initial_state();
  for (std::uint64_t ep = 0; ep < 20; ++ep) {
    rvl::Rng rng(rvl::derive_seed(7, ep));
    std::vector<double> u(120);
    for (auto& x : u) x = 0.001 * rvl::uniform_int(rng, 0, 9);
    const auto traj = rvl::simulate(u, p);
    for (const auto& s : traj.states) {
      EXPECT_NEAR(s.v * (s.a + s.c), s0.v * s0.a, 1e-6);
      EXPECT_NEAR(s.v * (s.b + s.c + s.d) - p.b_feed * (s.v - s0.v),
                  s0.v * (s0.b + s0.c + s0.d), 1e-6);
    }
  }
}

TEST(ReactorProperties, FourthOrderConvergence) {
  const auto ratios = rvl::testing::rk4_error_ratios();
  for (double r : ratios) {
    EXPECT_GE(r, 12.0);
    EXPECT_LE(r, 20.0);
  }
}

TEST(TrajectoryCsv, HeaderRowsAndFormat) {
  KineticsParams p;
  const auto traj = rvl::simulate(std::vector<double>(120, 0.003), p);
  std::ostringstream os;
  rvl::write_trajectory_csv(os, traj, p);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,u,A,B,C,D,V");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0,0.2,0,0,0,0.5");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 8), "1,0.003,");
  int rows = 2;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 121);
  EXPECT_EQ(rvl::format_sig10(1.0 / 3.0), "0.3333333333");
}

}  // namespace
