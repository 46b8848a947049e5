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

#include <array>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rvl/mdp.hpp"
#include "rvl/rng.hpp"

namespace {

using rvl::DiscreteState;

TEST(EncodeState, TableRows) {
  EXPECT_EQ(rvl::encode_state(0.00085, 0.0).index(), 1);
  EXPECT_EQ(rvl::encode_state(0.0, 0.0).index(), 9);
  EXPECT_EQ(rvl::encode_state(-0.003, 0.0).index(), 10);
  EXPECT_EQ(rvl::encode_state(0.001, 0.00125).index(), 10);
  EXPECT_EQ(rvl::encode_state(0.0004, 0.0001).index(), 6);
}

TEST(EncodeState, LowerInclusiveEdges) {
  for (int i = 0; i <= 8; ++i) {
    const double edge = rvl::kDefaultBinEdges[static_cast<std::size_t>(i)];
    EXPECT_EQ(rvl::encode_state(edge, 0.0).index(), 9 - i) << "edge " << i;
    EXPECT_EQ(rvl::encode_state(std::nextafter(edge, -1.0), 0.0).index(), 10 - i)
        << "below edge " << i;
  }
}

// Each finite x lands in exactly one interval of the partition.
TEST(EncodeState, PartitionOracle) {
  rvl::Rng rng(3);
  for (int n = 0; n < 10000; ++n) {
    const double x = (rvl::uniform01(rng) - 0.3) * 0.0015;
    int hits = 0;
    int expected = 0;
    if (x < 0.0) {
      ++hits;
      expected = 10;
    }
    for (int i = 0; i <= 8; ++i) {
      const double lo = 0.0001 * i;
      const double hi = i == 8 ? INFINITY : 0.0001 * (i + 1);
      if (x >= lo && x < hi) {
        ++hits;
        expected = 9 - i;
      }
    }
    ASSERT_EQ(hits, 1);
    EXPECT_EQ(rvl::encode_state(x, 0.0).index(), expected) << x;
  }
}

TEST(Reward, DefaultTable) {
  EXPECT_EQ(rvl::reward(DiscreteState(1)), 100.0);
  EXPECT_EQ(rvl::reward(DiscreteState(9)), 10.0);
  EXPECT_EQ(rvl::reward(DiscreteState(10)), -50.0);
  for (int i = 1; i < 10; ++i)
    EXPECT_GT(rvl::reward(DiscreteState(i)), rvl::reward(DiscreteState(i + 1)));
}

TEST(Actions, FeedBijection) {
  for (int i = 1; i <= 9; ++i) {
    const rvl::ControlAction a(i);
    EXPECT_EQ(rvl::feed_to_action(rvl::action_to_feed(a)), a);
    EXPECT_EQ(rvl::action_to_feed(rvl::feed_to_action(0.001 * i)), 0.001 * i);
  }
  EXPECT_THROW(rvl::feed_to_action(0.0), rvl::Error);
  EXPECT_THROW(rvl::feed_to_action(0.0015), rvl::Error);
  EXPECT_THROW(rvl::ControlAction(10), rvl::Error);
  EXPECT_THROW(DiscreteState(0), rvl::Error);
}

TEST(SampleMultistep, TruncatesAtEpisodeEnd) {
  rvl::Rng rng(1);
  for (int n = 0; n < 100; ++n) EXPECT_EQ(rvl::sample_multistep(rng, 1), 1);
  for (int n = 0; n < 1000; ++n) {
    const int m = rvl::sample_multistep(rng, 4);
    EXPECT_GE(m, 1);
    EXPECT_LE(m, 4);
  }
  EXPECT_THROW(rvl::sample_multistep(rng, 0), rvl::Error);
}

TEST(SampleMultistep, UniformFrequencies) {
  rvl::Rng rng(12345);
  std::array<int, 11> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rvl::sample_multistep(rng, 120))];
  EXPECT_EQ(counts[0], 0);
  double chi2 = 0.0;
  for (int m = 1; m <= 10; ++m) {
    const double f = counts[static_cast<std::size_t>(m)] / static_cast<double>(n);
    EXPECT_NEAR(f, 0.1, 0.01);
    const double e = n / 10.0;
    chi2 += (counts[static_cast<std::size_t>(m)] - e) * (counts[static_cast<std::size_t>(m)] - e) / e;
  }
  // 9 degrees of freedom, 0.999 quantile.
  EXPECT_LT(chi2, 27.88);
}

TEST(PeriodIndex, FloorDivision) {
  EXPECT_EQ(rvl::period_index(35, 30), 1);
  EXPECT_EQ(rvl::period_index(0), 0);
  EXPECT_EQ(rvl::period_index(119), 3);
}

TEST(EpisodeReturn, Examples) {
  const std::vector<double> three{1, 1, 1};
  const std::vector<double> two{1, 1};
  EXPECT_EQ(rvl::episode_return(three, 1.0), 3.0);
  EXPECT_EQ(rvl::episode_return(two, 0.5), 1.5);
  EXPECT_EQ(rvl::episode_return(std::vector<double>{}, 0.9), 0.0);
  EXPECT_THROW(rvl::episode_return(two, 0.0), rvl::Error);
}

TEST(MdpConfig, Validation) {
  rvl::MdpConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rewards[3] = cfg.rewards[2];
  EXPECT_THROW(cfg.validate(), rvl::ConfigError);
  cfg = {};
  cfg.edges[4] = cfg.edges[3];
  EXPECT_THROW(cfg.validate(), rvl::ConfigError);
}

}  // namespace
