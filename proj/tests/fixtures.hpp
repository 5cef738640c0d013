// Copyright 2026 The trajmode Authors. All Rights Reserved.
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

// Small seeded segment sets shared by the learner-level tests.

#include <vector>

#include "trajmode/channels.hpp"
#include "trajmode/eval.hpp"
#include "trajmode/synthgen.hpp"

namespace fixture {

inline std::vector<trajmode::Segment> synthetic_segments(std::size_t trips_per_mode, std::uint64_t seed,
                                                         std::size_t min_points = 40, std::size_t max_points = 140) {
  trajmode::DatasetOptions opt;
  opt.min_points = min_points;
  opt.max_points = max_points;
  std::vector<trajmode::Segment> out;
  for (const auto& trip : trajmode::generate_dataset(trajmode::default_profiles(), trips_per_mode, seed, opt)) {
    const auto kept = trajmode::filter_trajectory(trip);
    if (!kept) continue;
    for (auto& s : trajmode::build_segments(*kept)) out.push_back(std::move(s));
  }
  return out;
}

/// Published 5-fold confusion matrix of the stacked ensemble, rows actual.
inline trajmode::eval::ConfusionMatrix published_confusion() {
  trajmode::eval::ConfusionMatrix cm;
  cm.counts = {{{708, 32, 29, 0}, {32, 1573, 60, 38}, {30, 66, 1296, 91}, {7, 42, 142, 2864}}};
  return cm;
}

/// Label pairs that reproduce `cm`, actual-major order.
inline void expand_confusion(const trajmode::eval::ConfusionMatrix& cm, std::vector<int>& actual,
                             std::vector<int>& predicted) {
  actual.clear();
  predicted.clear();
  for (int a = 0; a < trajmode::kNumModes; ++a)
    for (int p = 0; p < trajmode::kNumModes; ++p)
      for (std::uint64_t k = 0; k < cm.counts[a][p]; ++k) {
        actual.push_back(a);
        predicted.push_back(p);
      }
}

}  // namespace fixture
