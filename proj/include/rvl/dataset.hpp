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

// Historical excitation dataset: U, [C] and [D] series of simulated batches.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvl/error.hpp"
#include "rvl/mdp.hpp"
#include "rvl/parallel.hpp"
#include "rvl/provenance.hpp"
#include "rvl/reactor.hpp"
#include "rvl/rng.hpp"

namespace rvl {

inline constexpr int kDatasetSchemaVersion = 1;

struct EpisodeRecord {
  std::vector<double> controls;  // effective feed per control step
  std::vector<double> c_series;  // controls.size() + 1
  std::vector<double> d_series;
  std::uint64_t seed = 0;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

enum class ExcitationKind { kPiecewise, kZero, kConstant };

// Piecewise-constant excitation: segment lengths uniform on
// [min_segment, max_segment], levels uniform over the nine feed actions.
struct ExcitationSpec {
  ExcitationKind kind = ExcitationKind::kPiecewise;
  int min_segment = 1;
  int max_segment = 10;
  double constant_feed = 0.0;

  friend bool operator==(const ExcitationSpec&, const ExcitationSpec&) = default;
};

struct Dataset {
  std::uint64_t seed = 0;
  KineticsParams params;
  ExcitationSpec excitation;
  std::optional<Provenance> provenance;
  std::vector<EpisodeRecord> episodes;

  std::size_t size() const { return episodes.size(); }
};

struct DatasetSplit {
  std::vector<EpisodeRecord> train;
  std::vector<EpisodeRecord> test;
};

inline std::vector<double> excitation_controls(const ExcitationSpec& spec, std::size_t steps,
                                               Rng& rng) {
  std::vector<double> u(steps, 0.0);
  switch (spec.kind) {
    case ExcitationKind::kZero:
      break;
    case ExcitationKind::kConstant:
      std::fill(u.begin(), u.end(), spec.constant_feed);
      break;
    case ExcitationKind::kPiecewise: {
      std::size_t t = 0;
      while (t < steps) {
        const auto len = static_cast<std::size_t>(uniform_int(rng, spec.min_segment, spec.max_segment));
        const double level = ControlAction(uniform_int(rng, 1, kNumActions)).feed();
        for (std::size_t i = 0; i < len && t < steps; ++i, ++t) u[t] = level;
      }
      break;
    }
  }
  return u;
}

inline EpisodeRecord record_from_trajectory(const Trajectory& traj, std::uint64_t seed) {
  EpisodeRecord rec;
  rec.seed = seed;
  rec.controls = traj.controls;
  rec.c_series.reserve(traj.states.size());
  rec.d_series.reserve(traj.states.size());
  for (const auto& s : traj.states) {
    rec.c_series.push_back(s.c);
    rec.d_series.push_back(s.d);
  }
  return rec;
}

inline EpisodeRecord simulate_episode(const ExcitationSpec& spec, const KineticsParams& params,
                                      std::uint64_t episode_seed) {
  Rng rng(episode_seed);
  const auto u = excitation_controls(spec, params.control_steps(), rng);
  return record_from_trajectory(simulate(u, params), episode_seed);
}

inline Dataset generate_dataset(std::size_t n, const ExcitationSpec& spec,
                                const KineticsParams& params, std::uint64_t seed) {
  if (n < 1) throw Error("dataset size must be >= 1");
  params.validate();
  Dataset ds;
  ds.seed = seed;
  ds.params = params;
  ds.excitation = spec;
  ds.episodes.resize(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      ds.episodes[i] = simulate_episode(spec, params, derive_seed(seed, i));
    } catch (const Error& e) {
      throw Error("episode " + std::to_string(i) + ": " + e.what());
    }
  });
  return ds;
}

// Uniform random partition without replacement.
inline DatasetSplit split_dataset(const Dataset& ds, std::size_t train_n, std::uint64_t seed) {
  if (train_n >= ds.size())
    throw Error("train_n (" + std::to_string(train_n) + ") must be smaller than the dataset (" +
                std::to_string(ds.size()) + ")");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i)));
    std::swap(idx[i], idx[j]);
  }
  DatasetSplit split;
  split.train.reserve(train_n);
  split.test.reserve(ds.size() - train_n);
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < train_n ? split.train : split.test).push_back(ds.episodes[idx[i]]);
  return split;
}

// ---- JSON-lines persistence ------------------------------------------------

inline const char* excitation_name(ExcitationKind k) {
  switch (k) {
    case ExcitationKind::kZero: return "zero";
    case ExcitationKind::kConstant: return "constant";
    case ExcitationKind::kPiecewise: break;
  }
  return "piecewise";
}

inline ExcitationKind excitation_kind_from_name(const std::string& s) {
  if (s == "piecewise") return ExcitationKind::kPiecewise;
  if (s == "zero") return ExcitationKind::kZero;
  if (s == "constant") return ExcitationKind::kConstant;
  throw ConfigError("unknown excitation kind '" + s + "'");
}

inline nlohmann::json to_json(const KineticsParams& p) {
  return {{"k1", p.k1},         {"k2", p.k2},
          {"b_feed", p.b_feed}, {"t_f", p.t_f},
          {"dt_control", p.dt_control}, {"n_substeps", p.n_substeps}};
}

inline KineticsParams kinetics_from_json(const nlohmann::json& j) {
  KineticsParams p;
  p.k1 = j.at("k1").get<double>();
  p.k2 = j.at("k2").get<double>();
  p.b_feed = j.at("b_feed").get<double>();
  p.t_f = j.at("t_f").get<double>();
  p.dt_control = j.at("dt_control").get<double>();
  p.n_substeps = j.at("n_substeps").get<int>();
  return p;
}

inline nlohmann::json to_json(const ExcitationSpec& e) {
  return {{"kind", excitation_name(e.kind)},
          {"min_segment", e.min_segment},
          {"max_segment", e.max_segment},
          {"constant_feed", e.constant_feed}};
}

inline ExcitationSpec excitation_from_json(const nlohmann::json& j) {
  ExcitationSpec e;
  e.kind = excitation_kind_from_name(j.at("kind").get<std::string>());
  e.min_segment = j.at("min_segment").get<int>();
  e.max_segment = j.at("max_segment").get<int>();
  e.constant_feed = j.at("constant_feed").get<double>();
  return e;
}

inline void save_dataset(std::ostream& os, const Dataset& ds) {
  nlohmann::json meta = {{"schema_version", kDatasetSchemaVersion},
                         {"seed", ds.seed},
                         {"n", ds.size()},
                         {"params", to_json(ds.params)},
                         {"excitation", to_json(ds.excitation)}};
  if (ds.provenance) meta["provenance"] = to_json(*ds.provenance);
  os << meta.dump() << '\n';
  for (const auto& ep : ds.episodes) {
    nlohmann::json line = {{"seed", ep.seed}, {"u", ep.controls}, {"c", ep.c_series},
                           {"d", ep.d_series}};
    os << line.dump() << '\n';
  }
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  save_dataset(os, ds);
  if (!os) throw Error("write failed: " + path);
}

namespace detail {

inline void check_series(const std::vector<double>& v, std::size_t expected, const char* name,
                         std::size_t line) {
  if (v.size() != expected)
    throw ParseError(std::string("field '") + name + "' has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(expected),
                     line);
  for (double x : v)
    if (!std::isfinite(x) || x < 0.0)
      throw ParseError(std::string("field '") + name + "' holds a negative or non-finite value",
                       line);
}

}  // namespace detail

inline Dataset load_dataset(std::istream& is) {
  Dataset ds;
  std::string text;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  bool have_meta = false;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      if (!have_meta) {
        if (j.at("schema_version").get<int>() != kDatasetSchemaVersion)
          throw ParseError("unsupported schema_version", line_no);
        ds.seed = j.at("seed").get<std::uint64_t>();
        declared = j.at("n").get<std::size_t>();
        ds.params = kinetics_from_json(j.at("params"));
        ds.excitation = excitation_from_json(j.at("excitation"));
        if (j.contains("provenance")) ds.provenance = provenance_from_json(j.at("provenance"));
        ds.episodes.reserve(declared);
        have_meta = true;
        continue;
      }
      EpisodeRecord ep;
      ep.seed = j.at("seed").get<std::uint64_t>();
      ep.controls = j.at("u").get<std::vector<double>>();
      ep.c_series = j.at("c").get<std::vector<double>>();
      ep.d_series = j.at("d").get<std::vector<double>>();
      const std::size_t steps = ds.params.control_steps();
      detail::check_series(ep.controls, steps, "u", line_no);
      detail::check_series(ep.c_series, steps + 1, "c", line_no);
      detail::check_series(ep.d_series, steps + 1, "d", line_no);
      ds.episodes.push_back(std::move(ep));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!have_meta) throw ParseError("missing metadata record", line_no + 1);
  if (ds.episodes.size() != declared)
    throw ParseError("expected " + std::to_string(declared) + " episodes, found " +
                         std::to_string(ds.episodes.size()),
                     line_no + 1);
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return load_dataset(is);
}

}  // namespace rvl
