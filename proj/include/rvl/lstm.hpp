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

// Gated recurrent cell (LSTM) with a sigmoid output head, plus batched
// backpropagation through time. Parameters live in one flat vector so that
// optimizers, clipping and finite-difference checks see a single buffer.
//
// Gate blocks are stacked in the order input, forget, candidate, output.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rvl/error.hpp"
#include "rvl/rng.hpp"

namespace rvl {

// Cell evaluations performed by the calling thread; lets tests count the
// work done by rollouts and lookahead.
inline thread_local std::size_t cell_evaluations = 0;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct CarriedState {
  VectorX<Scalar> h;
  VectorX<Scalar> c;

  static CarriedState zeros(int hidden) {
    return {VectorX<Scalar>::Zero(hidden), VectorX<Scalar>::Zero(hidden)};
  }
};

template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
class RecurrentModel {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;
  using MatMap = Eigen::Map<Matrix>;
  using ConstMatMap = Eigen::Map<const Matrix>;
  using VecMap = Eigen::Map<Vector>;
  using ConstVecMap = Eigen::Map<const Vector>;

  RecurrentModel() = default;
  RecurrentModel(int input_size, int hidden_size)
      : input_size_(input_size), hidden_size_(hidden_size) {
    if (input_size < 1 || hidden_size < 1) throw ShapeError("model sizes must be >= 1");
    params_ = Vector::Zero(parameter_count(input_size, hidden_size));
  }

  static std::size_t parameter_count(int input, int hidden) {
    const auto g = static_cast<std::size_t>(4 * hidden);
    return g * input + g * hidden + g + hidden + 1;
  }

  // Uniform(-scale, scale) weights, forget-gate bias set to forget_bias.
  static RecurrentModel initialized(int input, int hidden, std::uint64_t seed,
                                    double scale = 0.08, double forget_bias = 1.0) {
    RecurrentModel m(input, hidden);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < m.params_.size(); ++i)
      m.params_[i] = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * scale);
    auto b = m.bias();
    b.setZero();
    b.segment(hidden, hidden).setConstant(static_cast<Scalar>(forget_bias));
    m.output_bias() = Scalar(0);
    return m;
  }

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_size_; }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  MatMap w_input() { return MatMap(params_.data(), 4 * hidden_size_, input_size_); }
  ConstMatMap w_input() const { return ConstMatMap(params_.data(), 4 * hidden_size_, input_size_); }
  MatMap w_hidden() { return MatMap(params_.data() + off_wh(), 4 * hidden_size_, hidden_size_); }
  ConstMatMap w_hidden() const {
    return ConstMatMap(params_.data() + off_wh(), 4 * hidden_size_, hidden_size_);
  }
  VecMap bias() { return VecMap(params_.data() + off_b(), 4 * hidden_size_); }
  ConstVecMap bias() const { return ConstVecMap(params_.data() + off_b(), 4 * hidden_size_); }
  VecMap w_output() { return VecMap(params_.data() + off_wy(), hidden_size_); }
  ConstVecMap w_output() const { return ConstVecMap(params_.data() + off_wy(), hidden_size_); }
  Scalar& output_bias() { return params_[off_wy() + hidden_size_]; }
  Scalar output_bias() const { return params_[off_wy() + hidden_size_]; }

  bool all_finite() const { return params_.allFinite(); }

  template <typename Other>
  RecurrentModel<Other> cast() const {
    RecurrentModel<Other> m(input_size_, hidden_size_);
    m.params() = params_.template cast<Other>();
    return m;
  }

 private:
  std::size_t off_wh() const { return static_cast<std::size_t>(4 * hidden_size_ * input_size_); }
  std::size_t off_b() const {
    return off_wh() + static_cast<std::size_t>(4 * hidden_size_ * hidden_size_);
  }
  std::size_t off_wy() const { return off_b() + static_cast<std::size_t>(4 * hidden_size_); }

  int input_size_ = 0;
  int hidden_size_ = 0;
  Vector params_;
};

// One cell update followed by the sigmoid head.
template <typename Scalar>
std::pair<Scalar, CarriedState<Scalar>> forward_step(const RecurrentModel<Scalar>& model,
                                                     std::span<const Scalar> input,
                                                     const CarriedState<Scalar>& carried) {
  const int H = model.hidden_size();
  if (static_cast<int>(input.size()) != model.input_size())
    throw ShapeError("input has " + std::to_string(input.size()) + " features, model expects " +
                     std::to_string(model.input_size()));
  if (carried.h.size() != H || carried.c.size() != H)
    throw ShapeError("carried state does not match hidden_size " + std::to_string(H));
  ++cell_evaluations;
  Eigen::Map<const VectorX<Scalar>> x(input.data(), model.input_size());
  VectorX<Scalar> z = model.bias();
  z.noalias() += model.w_input() * x;
  z.noalias() += model.w_hidden() * carried.h;
  CarriedState<Scalar> next;
  next.c.resize(H);
  next.h.resize(H);
  for (int j = 0; j < H; ++j) {
    const Scalar i = sigmoid(z[j]);
    const Scalar f = sigmoid(z[H + j]);
    const Scalar g = std::tanh(z[2 * H + j]);
    const Scalar o = sigmoid(z[3 * H + j]);
    next.c[j] = f * carried.c[j] + i * g;
    next.h[j] = o * std::tanh(next.c[j]);
  }
  const Scalar y = sigmoid(model.w_output().dot(next.h) + model.output_bias());
  return {y, std::move(next)};
}

// A mini-batch of equal-length sequences laid out time-major: inputs[t] is
// input_size x batch, targets[t] is 1 x batch.
template <typename Scalar>
struct SequenceBatch {
  std::vector<MatrixX<Scalar>> inputs;
  std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> targets;

  std::size_t steps() const { return inputs.size(); }
  Eigen::Index batch() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

// Workspace reused across mini-batches to avoid per-step allocation.
template <typename Scalar>
struct BpttWorkspace {
  std::vector<MatrixX<Scalar>> gates;  // activated i, f, g, o (4H x B)
  std::vector<MatrixX<Scalar>> cell;   // C_t
  std::vector<MatrixX<Scalar>> hidden; // H_t
  std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> output;
};

// Mean squared error over every (step, sequence) pair and its gradient with
// respect to the flat parameter vector. Gradient is written into `grad`.
template <typename Scalar>
Scalar loss_and_gradient(const RecurrentModel<Scalar>& model, const SequenceBatch<Scalar>& batch,
                         VectorX<Scalar>& grad, BpttWorkspace<Scalar>& ws) {
  using Matrix = MatrixX<Scalar>;
  const int H = model.hidden_size();
  const std::size_t T = batch.steps();
  const Eigen::Index B = batch.batch();
  if (T == 0 || B == 0) throw ShapeError("empty batch");

  ws.gates.resize(T);
  ws.cell.resize(T + 1);
  ws.hidden.resize(T + 1);
  ws.output.resize(T);
  ws.cell[0].setZero(H, B);
  ws.hidden[0].setZero(H, B);

  const auto Wx = model.w_input();
  const auto Wh = model.w_hidden();
  const auto b = model.bias();
  const auto wy = model.w_output();
  const Scalar by = model.output_bias();

  Scalar loss = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (batch.inputs[t].rows() != model.input_size() || batch.inputs[t].cols() != B)
      throw ShapeError("batch input shape mismatch");
    Matrix& z = ws.gates[t];
    z.noalias() = Wx * batch.inputs[t];
    z.noalias() += Wh * ws.hidden[t];
    z.colwise() += b;
    z.topRows(2 * H) = z.topRows(2 * H).array().logistic();
    z.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh();
    z.bottomRows(H) = z.bottomRows(H).array().logistic();
    ws.cell[t + 1] = z.middleRows(H, H).cwiseProduct(ws.cell[t]) +
                     z.topRows(H).cwiseProduct(z.middleRows(2 * H, H));
    ws.hidden[t + 1] = z.bottomRows(H).cwiseProduct(ws.cell[t + 1].array().tanh().matrix());
    ws.output[t].noalias() = wy.transpose() * ws.hidden[t + 1];
    ws.output[t] = (ws.output[t].array() + by).logistic();
    loss += (ws.output[t] - batch.targets[t]).squaredNorm();
  }
  const Scalar norm = Scalar(1) / static_cast<Scalar>(T * static_cast<std::size_t>(B));
  loss *= norm;

  grad.setZero(static_cast<Eigen::Index>(
      RecurrentModel<Scalar>::parameter_count(model.input_size(), H)));
  RecurrentModel<Scalar> g(model.input_size(), H);
  g.params().setZero();
  auto dWx = g.w_input();
  auto dWh = g.w_hidden();
  auto db = g.bias();
  auto dwy = g.w_output();
  Scalar dby = 0;

  Matrix dh_next = Matrix::Zero(H, B);
  Matrix dc_next = Matrix::Zero(H, B);
  Matrix dz(4 * H, B);
  Matrix dh(H, B);
  Matrix dc(H, B);
  Matrix tanh_c(H, B);
  for (std::size_t t = T; t-- > 0;) {
    const auto& y = ws.output[t];
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dzy =
        (Scalar(2) * norm) * (y - batch.targets[t]).cwiseProduct(
                                 (Scalar(1) - y.array()).matrix().cwiseProduct(y));
    dwy.noalias() += ws.hidden[t + 1] * dzy.transpose();
    dby += dzy.sum();
    dh = dh_next;
    dh.noalias() += wy * dzy;

    const Matrix& z = ws.gates[t];
    const auto gi = z.topRows(H);
    const auto gf = z.middleRows(H, H);
    const auto gg = z.middleRows(2 * H, H);
    const auto go = z.bottomRows(H);
    tanh_c = ws.cell[t + 1].array().tanh();
    dc = dc_next + dh.cwiseProduct(go).cwiseProduct(
                       (Scalar(1) - tanh_c.array().square()).matrix());
    dz.topRows(H) = dc.cwiseProduct(gg).cwiseProduct(
        gi.cwiseProduct((Scalar(1) - gi.array()).matrix()));
    dz.middleRows(H, H) = dc.cwiseProduct(ws.cell[t]).cwiseProduct(
        gf.cwiseProduct((Scalar(1) - gf.array()).matrix()));
    dz.middleRows(2 * H, H) =
        dc.cwiseProduct(gi).cwiseProduct((Scalar(1) - gg.array().square()).matrix());
    dz.bottomRows(H) = dh.cwiseProduct(tanh_c).cwiseProduct(
        go.cwiseProduct((Scalar(1) - go.array()).matrix()));

    dWx.noalias() += dz * batch.inputs[t].transpose();
    dWh.noalias() += dz * ws.hidden[t].transpose();
    db += dz.rowwise().sum();
    dh_next.noalias() = Wh.transpose() * dz;
    dc_next = dc.cwiseProduct(gf);
  }
  g.output_bias() = dby;
  grad = std::move(g.params());
  return loss;
}

template <typename Scalar>
Scalar sequence_loss(const RecurrentModel<Scalar>& model, const SequenceBatch<Scalar>& batch) {
  VectorX<Scalar> grad;
  BpttWorkspace<Scalar> ws;
  return loss_and_gradient(model, batch, grad, ws);
}

}  // namespace rvl
