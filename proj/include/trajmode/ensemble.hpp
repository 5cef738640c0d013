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

// Level-1 combiners over level-0 class-probability outputs.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajmode/common.hpp"
#include "trajmode/forest.hpp"

namespace trajmode {

struct ProbMatrix {
  std::vector<std::array<double, kNumModes>> rows;
  std::string learner_id;

  std::size_t size() const { return rows.size(); }
};

/// Row-wise argmax, lowest index on ties.
std::vector<int> argmax_labels(const ProbMatrix& m);

struct VoteResult {
  std::vector<int> labels;
  ProbMatrix combined;
};

VoteResult average_vote(std::span<const ProbMatrix> mats);

/// Modal label per row. Ties go to the tied class with the highest mean
/// probability (when `probs` is given), then to the lowest class index.
std::vector<int> majority_vote(std::span<const std::vector<int>> label_sets, std::span<const ProbMatrix> probs = {});

struct WeightFitOptions {
  bool simplex = true;  // false: unconstrained least squares
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
};

struct WeightFit {
  std::vector<double> weights;
  double mse = 0.0;
  double uniform_mse = 0.0;
  std::size_t iterations = 0;
};

/// Mean over rows and classes of (sum_k w_k P_k - onehot(y))^2.
double combination_mse(std::span<const ProbMatrix> mats, std::span<const int> y, std::span<const double> w);

/// Projected gradient descent on the simplex from the uniform start, with a
/// backtracking step that never increases the objective.
WeightFit fit_optimal_weights(std::span<const ProbMatrix> mats, std::span<const int> y,
                              const WeightFitOptions& options = {});

VoteResult weighted_vote(std::span<const ProbMatrix> mats, std::span<const double> w);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

/// N x (4 * n_learners) meta-features, learner-major column blocks.
forest::FeatureMatrix stack_features(std::span<const ProbMatrix> mats);

}  // namespace trajmode
