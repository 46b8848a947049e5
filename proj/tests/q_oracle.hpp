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

// Independent arithmetic for the three table updates: plain 2-D arrays and
// the update rules written out longhand, no library code involved.

#pragma once

#include <algorithm>
#include <array>
#include <vector>

namespace rvl::testing {

using Grid = std::array<std::array<double, 9>, 10>;

enum class Rule { kVirtual, kReal, kFeedback };

// States and actions are 1-based as in the library.
struct ScriptedTransition {
  Rule rule;
  int s;
  int a;
  double r;
  int s_next;
};

inline double row_max(const Grid& g, int s) {
  const auto& row = g[static_cast<std::size_t>(s - 1)];
  return *std::max_element(row.begin(), row.end());
}

inline double& cell(Grid& g, int s, int a) {
  return g[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(a - 1)];
}

inline double cell(const Grid& g, int s, int a) {
  return g[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(a - 1)];
}

// Applies each transition in order to (bv, br).
inline void spreadsheet(std::vector<ScriptedTransition> script, Grid& bv, Grid& br, double alpha,
                        double gv, double gr) {
  for (const auto& x : script) {
    switch (x.rule) {
      case Rule::kVirtual: {
        const double old = cell(bv, x.s, x.a);
        cell(bv, x.s, x.a) = old + alpha * (x.r + gv * row_max(bv, x.s_next) - old);
        break;
      }
      case Rule::kReal: {
        const double old = cell(br, x.s, x.a);
        cell(br, x.s, x.a) = old + alpha * (x.r + gr * cell(bv, x.s_next, x.a) - old);
        break;
      }
      case Rule::kFeedback: {
        const double old = cell(bv, x.s, x.a);
        cell(bv, x.s, x.a) = old + alpha * (x.r + gv * cell(br, x.s_next, x.a) - old);
        break;
      }
    }
  }
}

// Twenty transitions mixing all three rules with revisits.
inline std::vector<ScriptedTransition> scripted_transitions() {
  return {
      {Rule::kVirtual, 9, 1, 10, 9},   {Rule::kVirtual, 9, 4, 40, 6},
      {Rule::kVirtual, 6, 4, 50, 5},   {Rule::kReal, 9, 4, 30, 6},
      {Rule::kReal, 6, 4, 60, 4},      {Rule::kFeedback, 9, 4, 40, 6},
      {Rule::kFeedback, 6, 4, 50, 5},  {Rule::kVirtual, 5, 7, -50, 10},
      {Rule::kVirtual, 10, 2, -50, 10}, {Rule::kReal, 5, 7, -50, 10},
      {Rule::kFeedback, 10, 2, 100, 1}, {Rule::kVirtual, 1, 9, 100, 1},
      {Rule::kReal, 1, 9, 90, 2},      {Rule::kReal, 9, 4, 30, 6},
      {Rule::kFeedback, 9, 4, 70, 4},  {Rule::kVirtual, 4, 3, 70, 9},
      {Rule::kReal, 4, 3, 80, 3},      {Rule::kFeedback, 3, 3, 80, 9},
      {Rule::kVirtual, 9, 4, 60, 4},   {Rule::kReal, 9, 4, 20, 9},
  };
}

}  // namespace rvl::testing
