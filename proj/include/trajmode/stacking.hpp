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

// Out-of-fold stacking with a random-forest meta-learner.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajmode/architectures.hpp"
#include "trajmode/ensemble.hpp"
#include "trajmode/forest.hpp"
#include "trajmode/learner.hpp"

namespace trajmode {

struct StackingOptions {
  std::size_t k_folds = 5;
  std::uint64_t fold_seed = 0;
  LearnerOptions learner;
  forest::ForestConfig meta{800, 8, 1, true, 0, 1};
  std::size_t jobs = 1;
};

/// Folds over positions 0..indices.size()-1, stratified by segment label.
std::vector<std::vector<std::size_t>> make_folds(const std::vector<Segment>& segs, std::span<const std::size_t> indices,
                                                 std::size_t k, std::uint64_t seed);

struct OutOfFold {
  std::vector<ProbMatrix> probs;          // one per retained learner, rows follow `indices`
  std::vector<std::size_t> learners;      // positions in the library that trained successfully
  std::vector<std::vector<std::size_t>> folds;
};

/// For every fold, each learner trains on the remaining folds and predicts the
/// held-out one. A learner that fails on any fold is dropped with a warning.
OutOfFold out_of_fold_probabilities(const std::vector<NetworkCatalogEntry>& library, const std::vector<Segment>& segs,
                                    std::span<const std::size_t> indices,
                                    const std::vector<std::vector<std::size_t>>& folds, const StackingOptions& options);

struct StackedModel {
  std::vector<NetworkCatalogEntry> library;  // retained learners only
  std::vector<nn::ModelFile> base;           // trained on the full training set
  forest::ForestModel meta;
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t fold_seed = 0;
  std::size_t segment_length = 0;
};

forest::ForestModel fit_meta_forest(const OutOfFold& oof, std::span<const int> labels, const StackingOptions& options);

/// Full stacking: OOF features, meta forest, then every retained base learner
/// retrained on all of `indices`.
StackedModel fit_meta_learner(const std::vector<NetworkCatalogEntry>& library, const std::vector<Segment>& segs,
                              std::span<const std::size_t> indices, const StackingOptions& options);

std::vector<ProbMatrix> base_probabilities(const std::vector<nn::ModelFile>& base, const std::vector<Segment>& segs,
                                           std::span<const std::size_t> indices);

VoteResult predict_stack(const StackedModel& model, const std::vector<Segment>& segs,
                         std::span<const std::size_t> indices);

/// Directory bundle: index.txt, library.tsv, base_<i>.mnet, meta.frst, folds.txt.
void save_stack(const std::string& dir, const StackedModel& model);
StackedModel load_stack(const std::string& dir);

}  // namespace trajmode
