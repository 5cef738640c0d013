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

// Level-0 learners: a catalog entry trained on standardized segments.

#include <optional>
#include <span>
#include <vector>

#include "trajmode/architectures.hpp"
#include "trajmode/channels.hpp"
#include "trajmode/ensemble.hpp"
#include "trajmode/nn.hpp"

namespace trajmode {

/// Per-channel mean/std over the valid (non-padded) rows of the given segments.
nn::Normalizer fit_normalizer(const std::vector<Segment>& segs, std::span<const std::size_t> indices);

/// Standardizes every row, padding included, with the same statistics.
nn::Tensor2D to_tensor(const Segment& seg, const nn::Normalizer& norm);

struct LearnerOptions {
  std::size_t batch_size = 16;
  std::size_t patience = 5;
  double learning_rate = 1e-4;
  /// Overrides every entry's epoch count when set.
  std::optional<std::size_t> epochs;
  /// Stratified share of the training indices held back for early stopping.
  double valid_fraction = 0.1;
  std::size_t width_divisor = 1;
};

std::vector<int> segment_labels(const std::vector<Segment>& segs, std::span<const std::size_t> indices);

/// Trains one catalog entry on segs[indices]. Seeds derive from entry.seed and `salt`.
nn::ModelFile fit_learner(const NetworkCatalogEntry& entry, const std::vector<Segment>& segs,
                          std::span<const std::size_t> indices, const LearnerOptions& options,
                          std::uint64_t salt = 0, nn::TrainHistory* history = nullptr);

ProbMatrix predict_learner(const nn::ModelFile& model, const std::vector<Segment>& segs,
                           std::span<const std::size_t> indices);

std::vector<std::size_t> all_indices(std::size_t n);

}  // namespace trajmode
