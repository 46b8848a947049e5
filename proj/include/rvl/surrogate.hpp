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

// The learned virtual space: one recurrent model per product ([C] and [D]),
// trained on historical excitation episodes with teacher forcing and rolled
// out autoregressively by the agents.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rvl/dataset.hpp"
#include "rvl/error.hpp"
#include "rvl/lstm.hpp"
#include "rvl/provenance.hpp"
#include "rvl/rng.hpp"

namespace rvl {

using ModelScalar = float;
using Model = RecurrentModel<ModelScalar>;
using Carry = CarriedState<ModelScalar>;

enum class Product { kC, kD };

inline const char* product_name(Product p) { return p == Product::kC ? "C" : "D"; }

// Normalized value = raw * scale + offset.
struct Normalization {
  double u_scale = 1.0 / 0.009;
  double y_scale = 1.0 / 0.1;
  double y_offset = 0.0;

  double norm_u(double u) const { return u * u_scale; }
  double norm_y(double y) const { return y * y_scale + y_offset; }
  double denorm_y(double y) const { return (y - y_offset) / y_scale; }

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

enum class OptimizerKind { kSgd, kAdam };

struct TrainingConfig {
  int hidden_size = 100;
  int mini_batch = 20;
  int epochs = 3000;
  double learning_rate = 0.05;
  double clip_norm = 1.0;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double init_scale = 0.08;
  double forget_bias = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;

  void validate() const {
    if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
    if (mini_batch < 1) throw ConfigError("mini_batch must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  }
};

inline const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

inline OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

// Moment estimates for Adam; empty for SGD.
struct OptimizerState {
  VectorX<ModelScalar> m;
  VectorX<ModelScalar> v;
  std::uint64_t step = 0;
};

// Everything needed to resume training or to run inference.
struct TrainedModel {
  Model model;
  Product product = Product::kC;
  Normalization norm;
  TrainingConfig config;
  OptimizerState optimizer;
  int epochs_trained = 0;
  std::vector<double> loss_curve;  // one entry per trained epoch
  std::optional<Provenance> provenance;
};

namespace detail {

inline const std::vector<double>& series_of(const EpisodeRecord& ep, Product p) {
  return p == Product::kC ? ep.c_series : ep.d_series;
}

inline SequenceBatch<ModelScalar> make_batch(std::span<const EpisodeRecord* const> episodes,
                                             Product product, const Normalization& norm) {
  const std::size_t T = episodes.front()->controls.size();
  const auto B = static_cast<Eigen::Index>(episodes.size());
  SequenceBatch<ModelScalar> batch;
  batch.inputs.resize(T);
  batch.targets.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    batch.inputs[t].resize(2, B);
    batch.targets[t].resize(B);
  }
  for (Eigen::Index b = 0; b < B; ++b) {
    const EpisodeRecord& ep = *episodes[static_cast<std::size_t>(b)];
    if (ep.controls.size() != T) throw ShapeError("episodes in a batch must share length");
    const auto& y = series_of(ep, product);
    for (std::size_t t = 0; t < T; ++t) {
      batch.inputs[t](0, b) = static_cast<ModelScalar>(norm.norm_u(ep.controls[t]));
      batch.inputs[t](1, b) = static_cast<ModelScalar>(norm.norm_y(y[t]));
      batch.targets[t](b) = static_cast<ModelScalar>(norm.norm_y(y[t + 1]));
    }
  }
  return batch;
}

inline void clip_gradient(VectorX<ModelScalar>& grad, double max_norm) {
  const double n = static_cast<double>(grad.norm());
  if (n > max_norm) grad *= static_cast<ModelScalar>(max_norm / n);
}

inline void apply_update(Model& model, const VectorX<ModelScalar>& grad,
                         const TrainingConfig& cfg, OptimizerState& st) {
  const auto lr = static_cast<ModelScalar>(cfg.learning_rate);
  if (cfg.optimizer == OptimizerKind::kSgd) {
    model.params().noalias() -= lr * grad;
    ++st.step;
    return;
  }
  constexpr ModelScalar kBeta1 = 0.9f, kBeta2 = 0.999f, kEps = 1e-8f;
  if (st.m.size() != grad.size()) {
    st.m = VectorX<ModelScalar>::Zero(grad.size());
    st.v = VectorX<ModelScalar>::Zero(grad.size());
  }
  ++st.step;
  st.m = kBeta1 * st.m + (1 - kBeta1) * grad;
  st.v = kBeta2 * st.v + (1 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(static_cast<double>(kBeta1), static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(static_cast<double>(kBeta2), static_cast<double>(st.step));
  const auto step = static_cast<ModelScalar>(cfg.learning_rate / c1);
  const auto vc = static_cast<ModelScalar>(1.0 / c2);
  model.params().array() -= step * st.m.array() / ((st.v.array() * vc).sqrt() + kEps);
}

}  // namespace detail

using EpochCallback = std::function<void(int epoch, double loss)>;

inline TrainedModel make_untrained(Product product, const TrainingConfig& cfg,
                                   const Normalization& norm = {}) {
  cfg.validate();
  TrainedModel tm;
  tm.product = product;
  tm.norm = norm;
  tm.config = cfg;
  tm.model = Model::initialized(2, cfg.hidden_size, derive_seed(cfg.seed, "init"),
                                cfg.init_scale, cfg.forget_bias);
  return tm;
}

// Mini-batch training over full-length sequences (BPTT across every step).
// Continues from tm.epochs_trained up to `until_epoch` (default: config.epochs).
inline void train(TrainedModel& tm, std::span<const EpisodeRecord> train_set,
                  std::optional<int> until_epoch = std::nullopt,
                  const EpochCallback& on_epoch = {}) {
  const TrainingConfig& cfg = tm.config;
  cfg.validate();
  if (train_set.empty()) throw Error("training set is empty");
  const int last = until_epoch.value_or(cfg.epochs);
  const std::size_t n = train_set.size();
  const auto mb = static_cast<std::size_t>(cfg.mini_batch);

  std::vector<std::size_t> order(n);
  std::vector<const EpisodeRecord*> members;
  VectorX<ModelScalar> grad;
  BpttWorkspace<ModelScalar> ws;
  for (int epoch = tm.epochs_trained; epoch < last; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i)))]);

    double weighted = 0.0;
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      members.clear();
      for (std::size_t i = start; i < end; ++i) members.push_back(&train_set[order[i]]);
      const auto batch = detail::make_batch(members, tm.product, tm.norm);
      const double loss = loss_and_gradient(tm.model, batch, grad, ws);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw DivergenceError("non-finite training loss", static_cast<std::size_t>(epoch + 1));
      weighted += loss * static_cast<double>(end - start);
      detail::clip_gradient(grad, cfg.clip_norm);
      detail::apply_update(tm.model, grad, cfg, tm.optimizer);
    }
    const double epoch_loss = weighted / static_cast<double>(n);
    if (!tm.model.all_finite())
      throw DivergenceError("non-finite weights", static_cast<std::size_t>(epoch + 1));
    tm.loss_curve.push_back(epoch_loss);
    tm.epochs_trained = epoch + 1;
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }
}

// ---- virtual space ---------------------------------------------------------

// Carried state of both models plus the last values fed back as inputs.
struct VirtualCarry {
  Carry c_state;
  Carry d_state;
  double c_prev = 0.0;
  double d_prev = 0.0;
  int t = 0;  // steps advanced since reset
};

struct VirtualStep {
  double c = 0.0;
  double d = 0.0;
};

class VirtualSpace {
 public:
  VirtualSpace() = default;
  VirtualSpace(TrainedModel c_model, TrainedModel d_model)
      : c_(std::move(c_model)), d_(std::move(d_model)) {
    if (c_.product != Product::kC || d_.product != Product::kD)
      throw ShapeError("virtual space needs a [C] model and a [D] model");
  }

  const TrainedModel& model_c() const { return c_; }
  const TrainedModel& model_d() const { return d_; }

  VirtualCarry reset(double c0 = 0.0, double d0 = 0.0) const {
    return {Carry::zeros(c_.model.hidden_size()), Carry::zeros(d_.model.hidden_size()), c0, d0, 0};
  }

  // Advances both models by one control step under feed u. The carry is
  // taken by value so callers fork futures by copying.
  std::pair<VirtualStep, VirtualCarry> step(VirtualCarry carry, double u) const {
    const auto c_out = advance(c_, carry.c_state, u, carry.c_prev);
    const auto d_out = advance(d_, carry.d_state, u, carry.d_prev);
    carry.c_prev = c_out;
    carry.d_prev = d_out;
    ++carry.t;
    return {{c_out, d_out}, std::move(carry)};
  }

  // Replaces the fed-back values with measurements (used when the virtual
  // space shadows the real process).
  static void observe(VirtualCarry& carry, double c, double d) {
    carry.c_prev = c;
    carry.d_prev = d;
  }

 private:
  static double advance(const TrainedModel& tm, Carry& state, double u, double y_prev) {
    const std::array<ModelScalar, 2> x = {static_cast<ModelScalar>(tm.norm.norm_u(u)),
                                          static_cast<ModelScalar>(tm.norm.norm_y(y_prev))};
    auto [y, next] = forward_step<ModelScalar>(tm.model, x, state);
    state = std::move(next);
    return tm.norm.denorm_y(static_cast<double>(y));
  }

  TrainedModel c_;
  TrainedModel d_;
};

inline std::pair<VirtualStep, VirtualCarry> step_virtual(const VirtualSpace& vs,
                                                         const VirtualCarry& carry, double u) {
  return vs.step(carry, u);
}

struct SeriesPair {
  std::vector<double> c;
  std::vector<double> d;
};

// Closed-loop prediction: each step feeds (u_t, y_hat_t) back into the model.
inline SeriesPair rollout_predict(const VirtualSpace& vs, std::span<const double> controls,
                                  double c0 = 0.0, double d0 = 0.0) {
  SeriesPair out;
  out.c.reserve(controls.size() + 1);
  out.d.reserve(controls.size() + 1);
  out.c.push_back(c0);
  out.d.push_back(d0);
  VirtualCarry carry = vs.reset(c0, d0);
  for (double u : controls) {
    auto [y, next] = vs.step(std::move(carry), u);
    carry = std::move(next);
    out.c.push_back(y.c);
    out.d.push_back(y.d);
  }
  return out;
}

// Single-model rollout, used to score a model while it trains.
inline std::vector<double> rollout_single(const TrainedModel& tm, std::span<const double> controls,
                                          double y0 = 0.0) {
  std::vector<double> out{y0};
  out.reserve(controls.size() + 1);
  Carry carry = Carry::zeros(tm.model.hidden_size());
  double y = y0;
  for (double u : controls) {
    const std::array<ModelScalar, 2> x = {static_cast<ModelScalar>(tm.norm.norm_u(u)),
                                          static_cast<ModelScalar>(tm.norm.norm_y(y))};
    auto [o, next] = forward_step<ModelScalar>(tm.model, x, carry);
    carry = std::move(next);
    y = tm.norm.denorm_y(static_cast<double>(o));
    out.push_back(y);
  }
  return out;
}

// ---- error metrics ---------------------------------------------------------

struct RmseResult {
  std::vector<double> per_step;  // RMSE across series at each time index
  double mean = 0.0;             // mean of per_step
};

inline RmseResult rmse(std::span<const std::vector<double>> predicted,
                       std::span<const std::vector<double>> truth) {
  if (predicted.size() != truth.size()) throw Error("rmse: series count mismatch");
  if (predicted.empty()) throw Error("rmse: no series");
  const std::size_t len = truth.front().size();
  RmseResult r;
  r.per_step.assign(len, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i].size() != len || truth[i].size() != len)
      throw Error("rmse: series length mismatch");
    for (std::size_t t = 0; t < len; ++t) {
      const double e = predicted[i][t] - truth[i][t];
      r.per_step[t] += e * e;
    }
  }
  for (double& x : r.per_step) x = std::sqrt(x / static_cast<double>(truth.size()));
  r.mean = len == 0 ? 0.0
                    : std::accumulate(r.per_step.begin(), r.per_step.end(), 0.0) /
                          static_cast<double>(len);
  return r;
}

inline RmseResult rmse(const std::vector<double>& predicted, const std::vector<double>& truth) {
  return rmse(std::span<const std::vector<double>>(&predicted, 1),
              std::span<const std::vector<double>>(&truth, 1));
}

// Per-step RMSE of closed-loop predictions over a set of episodes.
inline std::pair<RmseResult, RmseResult> evaluate_rmse(const VirtualSpace& vs,
                                                       std::span<const EpisodeRecord> episodes) {
  std::vector<std::vector<double>> pc, pd, tc, td;
  pc.reserve(episodes.size());
  pd.reserve(episodes.size());
  for (const auto& ep : episodes) {
    auto pred = rollout_predict(vs, ep.controls, ep.c_series.front(), ep.d_series.front());
    pc.push_back(std::move(pred.c));
    pd.push_back(std::move(pred.d));
    tc.push_back(ep.c_series);
    td.push_back(ep.d_series);
  }
  return {rmse(pc, tc), rmse(pd, td)};
}

// ---- checkpoints -----------------------------------------------------------

inline constexpr int kModelCheckpointVersion = 1;

inline nlohmann::json to_json(const TrainingConfig& c) {
  return {{"hidden_size", c.hidden_size},     {"mini_batch", c.mini_batch},
          {"epochs", c.epochs},               {"learning_rate", c.learning_rate},
          {"clip_norm", c.clip_norm},         {"optimizer", optimizer_name(c.optimizer)},
          {"init_scale", c.init_scale},       {"forget_bias", c.forget_bias},
          {"seed", c.seed}};
}

inline TrainingConfig training_config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.hidden_size = j.at("hidden_size").get<int>();
  c.mini_batch = j.at("mini_batch").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  c.init_scale = j.at("init_scale").get<double>();
  c.forget_bias = j.at("forget_bias").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace detail {

template <typename Vec>
std::vector<float> to_std(const Vec& v) {
  return std::vector<float>(v.data(), v.data() + v.size());
}

template <typename Vec>
void from_std(const nlohmann::json& j, const char* key, Vec&& dst) {
  const auto v = j.at(key).get<std::vector<float>>();
  if (static_cast<Eigen::Index>(v.size()) != dst.size())
    throw ShapeError(std::string("checkpoint tensor '") + key + "' has " +
                     std::to_string(v.size()) + " values, expected " + std::to_string(dst.size()));
  std::copy(v.begin(), v.end(), dst.data());
}

}  // namespace detail

inline nlohmann::json to_json(const TrainedModel& tm) {
  nlohmann::json j = {
      {"format", "rvl-recurrent-model"},
      {"version", kModelCheckpointVersion},
      {"product", product_name(tm.product)},
      {"input_size", tm.model.input_size()},
      {"hidden_size", tm.model.hidden_size()},
      {"gate_order", "input,forget,candidate,output"},
      {"w_input", detail::to_std(tm.model.w_input())},
      {"w_hidden", detail::to_std(tm.model.w_hidden())},
      {"bias", detail::to_std(tm.model.bias())},
      {"w_output", detail::to_std(tm.model.w_output())},
      {"b_output", tm.model.output_bias()},
      {"normalization",
       {{"u_scale", tm.norm.u_scale}, {"y_scale", tm.norm.y_scale}, {"y_offset", tm.norm.y_offset}}},
      {"training", to_json(tm.config)},
      {"epochs_trained", tm.epochs_trained},
      {"loss_curve", tm.loss_curve},
  };
  if (tm.config.optimizer == OptimizerKind::kAdam && tm.optimizer.m.size() > 0) {
    j["optimizer_state"] = {{"step", tm.optimizer.step},
                            {"m", detail::to_std(tm.optimizer.m)},
                            {"v", detail::to_std(tm.optimizer.v)}};
  } else {
    j["optimizer_state"] = {{"step", tm.optimizer.step}};
  }
  if (tm.provenance) j["provenance"] = to_json(*tm.provenance);
  return j;
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rvl-recurrent-model")
      throw ShapeError("not a recurrent model checkpoint");
    if (j.at("version").get<int>() != kModelCheckpointVersion)
      throw ShapeError("unsupported checkpoint version");
    TrainedModel tm;
    const std::string product = j.at("product").get<std::string>();
    if (product != "C" && product != "D") throw ShapeError("unknown product '" + product + "'");
    tm.product = product == "C" ? Product::kC : Product::kD;
    tm.model = Model(j.at("input_size").get<int>(), j.at("hidden_size").get<int>());
    detail::from_std(j, "w_input", tm.model.w_input());
    detail::from_std(j, "w_hidden", tm.model.w_hidden());
    detail::from_std(j, "bias", tm.model.bias());
    detail::from_std(j, "w_output", tm.model.w_output());
    tm.model.output_bias() = j.at("b_output").get<float>();
    if (!tm.model.all_finite()) throw ShapeError("checkpoint holds non-finite weights");
    const auto& n = j.at("normalization");
    tm.norm = {n.at("u_scale").get<double>(), n.at("y_scale").get<double>(),
               n.at("y_offset").get<double>()};
    tm.config = training_config_from_json(j.at("training"));
    if (tm.config.hidden_size != tm.model.hidden_size())
      throw ShapeError("training hidden_size does not match weights");
    tm.epochs_trained = j.at("epochs_trained").get<int>();
    tm.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    const auto& os = j.at("optimizer_state");
    tm.optimizer.step = os.at("step").get<std::uint64_t>();
    if (os.contains("m")) {
      tm.optimizer.m.resize(tm.model.params().size());
      tm.optimizer.v.resize(tm.model.params().size());
      detail::from_std(os, "m", tm.optimizer.m);
      detail::from_std(os, "v", tm.optimizer.v);
    }
    if (j.contains("provenance")) tm.provenance = provenance_from_json(j.at("provenance"));
    return tm;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("malformed model checkpoint: ") + e.what());
  }
}

inline void save_model(const std::string& path, const TrainedModel& tm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << to_json(tm).dump() << '\n';
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(path + ": " + e.what());
  }
  return trained_model_from_json(j);
}

}  // namespace rvl
