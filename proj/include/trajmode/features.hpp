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

// Hand-crafted per-segment summary features for the classical baselines.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "trajmode/channels.hpp"
#include "trajmode/forest.hpp"

namespace trajmode {

inline constexpr std::size_t kNumHandcraftedFeatures = 9;

/// Column names, in order. Speeds are km/h, times s, distances m.
inline constexpr std::array<std::string_view, kNumHandcraftedFeatures> kHandcraftedFeatureNames{
    "mean_speed_kmh", "p85_speed_kmh", "max_speed_kmh",  "max_accel",     "min_accel",
    "travel_time_s",  "distance_m",    "mean_bearing_rate", "speed_std_kmh"};

/// Computed from the valid rows only. An all-padding segment maps to zeros.
std::array<double, kNumHandcraftedFeatures> handcrafted_features(const Segment& seg);

forest::FeatureMatrix handcrafted_matrix(const std::vector<Segment>& segs, std::span<const std::size_t> indices);

/// Decision tree baseline: one unbagged tree on all features, nodes below 20 not split.
forest::ForestConfig decision_tree_baseline(std::uint64_t seed);

/// Random forest baseline: 1000 bagged trees.
forest::ForestConfig random_forest_baseline(std::uint64_t seed);

}  // namespace trajmode
