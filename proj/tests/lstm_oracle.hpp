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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rvl/lstm.hpp"
#include "rvl/rng.hpp"

namespace rvl::testing {

// Loss computed one sequence and one step at a time through forward_step,
// independent of the batched training path.
inline double reference_loss(const RecurrentModel<double>& m, const SequenceBatch<double>& batch) {
  double total = 0.0;
  const auto B = batch.batch();
  for (Eigen::Index col = 0; col < B; ++col) {
    CarriedState<double> carry = CarriedState<double>::zeros(m.hidden_size());
    for (std::size_t t = 0; t < batch.steps(); ++t) {
      std::vector<double> x(static_cast<std::size_t>(m.input_size()));
      for (int i = 0; i < m.input_size(); ++i) x[static_cast<std::size_t>(i)] = batch.inputs[t](i, col);
      auto [y, next] = forward_step(m, std::span<const double>(x), carry);
      carry = std::move(next);
      const double e = y - batch.targets[t](0, col);
      total += e * e;
    }
  }
  return total / static_cast<double>(batch.steps() * static_cast<std::size_t>(B));
}

inline SequenceBatch<double> toy_batch(int input, int steps, int batch, std::uint64_t seed) {
  Rng rng(seed);
  SequenceBatch<double> b;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd x(input, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * uniform01(rng) - 1.0;
    Eigen::RowVectorXd y(batch);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = uniform01(rng);
    b.inputs.push_back(x);
    b.targets.push_back(y);
  }
  return b;
}

// Largest relative gap between the analytic gradient and central differences
// (step h) of the reference loss.
inline double gradient_check(RecurrentModel<double> m, const SequenceBatch<double>& batch,
                             double h = 1e-5) {
  Eigen::VectorXd grad;
  BpttWorkspace<double> ws;
  loss_and_gradient(m, batch, grad, ws);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double saved = m.params()[i];
    m.params()[i] = saved + h;
    const double up = reference_loss(m, batch);
    m.params()[i] = saved - h;
    const double down = reference_loss(m, batch);
    m.params()[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-7});
    worst = std::max(worst, std::abs(fd - grad[i]) / scale);
  }
  return worst;
}

}  // namespace rvl::testing
