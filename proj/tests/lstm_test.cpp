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
#include <vector>

#include <gtest/gtest.h>

#include "rvl/lstm.hpp"
#include "rvl/rng.hpp"
#include "lstm_oracle.hpp"

namespace {

using Model = rvl::RecurrentModel<double>;
using Carry = rvl::CarriedState<double>;

using rvl::testing::reference_loss;
using rvl::testing::toy_batch;

TEST(ForwardStep, ZeroWeightsGiveHalf) {
  Model m(2, 4);
  m.params().setZero();
  const std::vector<double> x{0.0, 0.0};
  auto [y, next] = rvl::forward_step(m, std::span<const double>(x), Carry::zeros(4));
  EXPECT_EQ(y, 0.5);
  EXPECT_TRUE(next.h.isZero());
}

TEST(ForwardStep, OutputInUnitInterval) {
  const auto m = Model::initialized(2, 8, 3, 2.0, 1.0);
  Carry c = Carry::zeros(8);
  rvl::Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> x{10.0 * rvl::uniform01(rng), -5.0};
    auto [y, next] = rvl::forward_step(m, std::span<const double>(x), c);
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
    c = std::move(next);
  }
}

TEST(ForwardStep, ShapeErrors) {
  const auto m = Model::initialized(2, 4, 1);
  const std::vector<double> x3{0.0, 0.0, 0.0};
  const std::vector<double> x2{0.0, 0.0};
  EXPECT_THROW(rvl::forward_step(m, std::span<const double>(x3), Carry::zeros(4)), rvl::ShapeError);
  EXPECT_THROW(rvl::forward_step(m, std::span<const double>(x2), Carry::zeros(5)), rvl::ShapeError);
}

TEST(ForwardStep, CountsCellEvaluations) {
  const auto m = Model::initialized(2, 4, 1);
  const std::vector<double> x{0.1, 0.2};
  const auto before = rvl::cell_evaluations;
  Carry c = Carry::zeros(4);
  for (int i = 0; i < 7; ++i) c = rvl::forward_step(m, std::span<const double>(x), c).second;
  EXPECT_EQ(rvl::cell_evaluations - before, 7u);
}

TEST(RecurrentModel, LayoutAndInit) {
  EXPECT_EQ(Model::parameter_count(2, 3), 4u * 3 * 2 + 4u * 3 * 3 + 4u * 3 + 3 + 1);
  const auto m = Model::initialized(2, 3, 5, 0.08, 1.0);
  EXPECT_EQ(m.w_input().rows(), 12);
  EXPECT_EQ(m.w_hidden().cols(), 3);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(m.bias()[3 + j], 1.0);  // forget gate block
  EXPECT_LE(m.w_input().cwiseAbs().maxCoeff(), 0.08);
  EXPECT_TRUE(m.all_finite());
  const auto again = Model::initialized(2, 3, 5, 0.08, 1.0);
  EXPECT_EQ(m.params(), again.params());
}

TEST(LossAndGradient, LossMatchesStepwiseReference) {
  const auto m = Model::initialized(2, 5, 7, 0.5, 1.0);
  const auto batch = toy_batch(2, 6, 3, 8);
  EXPECT_NEAR(rvl::sequence_loss(m, batch), reference_loss(m, batch), 1e-14);
}

// Central differences, h = 1e-5, on a 5-step toy with small random weights.
TEST(LossAndGradient, MatchesFiniteDifferences) {
  auto m = Model::initialized(2, 4, 11, 0.5, 1.0);
  const auto batch = toy_batch(2, 5, 3, 12);
  Eigen::VectorXd grad;
  rvl::BpttWorkspace<double> ws;
  rvl::loss_and_gradient(m, batch, grad, ws);
  ASSERT_EQ(grad.size(), m.params().size());
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double saved = m.params()[i];
    m.params()[i] = saved + h;
    const double up = reference_loss(m, batch);
    m.params()[i] = saved - h;
    const double down = reference_loss(m, batch);
    m.params()[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-7});
    EXPECT_LE(std::abs(fd - grad[i]) / scale, 1e-4) << "parameter " << i;
  }
}

TEST(LossAndGradient, EmptyBatchIsShapeError) {
  const auto m = Model::initialized(2, 4, 1);
  rvl::SequenceBatch<double> empty;
  EXPECT_THROW(rvl::sequence_loss(m, empty), rvl::ShapeError);
}

TEST(RecurrentModel, FloatCastRoundTrip) {
  const auto m = Model::initialized(2, 4, 1);
  const auto f = m.cast<float>();
  EXPECT_EQ(f.hidden_size(), 4);
  EXPECT_NEAR(f.cast<double>().params()[3], m.params()[3], 1e-7);
}

}  // namespace
