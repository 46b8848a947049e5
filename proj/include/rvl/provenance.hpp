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

// Fields stamped into every pipeline artifact so reports can refuse to mix
// outputs of different configurations.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace rvl {

struct Provenance {
  std::string config_hash;
  std::uint64_t master_seed = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;

  std::string csv_comment() const {
    return "# config_hash=" + config_hash + " master_seed=" + std::to_string(master_seed) + "\n";
  }
};

inline nlohmann::json to_json(const Provenance& p) {
  return {{"config_hash", p.config_hash}, {"master_seed", p.master_seed}};
}

inline Provenance provenance_from_json(const nlohmann::json& j) {
  return {j.at("config_hash").get<std::string>(), j.at("master_seed").get<std::uint64_t>()};
}

// Parses the leading `# config_hash=... master_seed=...` line of a CSV.
inline std::optional<Provenance> parse_csv_provenance(const std::string& first_line) {
  const std::string key1 = "# config_hash=";
  const std::string key2 = " master_seed=";
  if (first_line.rfind(key1, 0) != 0) return std::nullopt;
  const auto pos = first_line.find(key2);
  if (pos == std::string::npos) return std::nullopt;
  Provenance p;
  p.config_hash = first_line.substr(key1.size(), pos - key1.size());
  try {
    p.master_seed = std::stoull(first_line.substr(pos + key2.size()));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return p;
}

}  // namespace rvl
