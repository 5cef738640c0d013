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

// CART classification trees (Gini) and bootstrap random forests.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajmode/common.hpp"

namespace trajmode::forest {

/// Row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

using ClassCounts = std::array<double, kNumModes>;

double gini_impurity(std::span<const double> class_counts);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;  // x <= threshold goes left
  double gain = 0.0;
};

/// Exhaustive scan over candidate features and midpoints of sorted distinct
/// values. Ties go to the lowest feature, then the lowest threshold.
std::optional<Split> best_split(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> samples,
                                std::span<const std::size_t> candidate_features);

struct TreeNode {
  // Leaves have left == right == -1 and a normalized class distribution.
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  ClassCounts distribution{};

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // preorder, root at 0

  const ClassCounts& leaf_for(std::span<const double> row) const;
};

struct ForestConfig {
  std::size_t n_trees = 800;
  std::size_t max_features = 8;  // per split, clamped to the feature count
  std::size_t min_node_size = 1;  // nodes smaller than this are not split
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::size_t n_features = 0;
};

struct ForestPrediction {
  std::vector<std::array<double, kNumModes>> probs;
  std::vector<int> labels;
};

Tree grow_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> samples,
               std::size_t max_features, std::size_t min_node_size, std::uint64_t seed);

ForestModel train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestConfig& config);

ForestPrediction predict_forest(const ForestModel& model, const FeatureMatrix& x);

void write_forest(std::ostream& os, const ForestModel& model);
ForestModel read_forest(std::istream& is);
void save_forest(const std::string& path, const ForestModel& model);
ForestModel load_forest(const std::string& path);

}  // namespace trajmode::forest
