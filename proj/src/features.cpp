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

#include "trajmode/features.hpp"

#include <algorithm>
#include <cmath>

namespace trajmode {

namespace {

constexpr double kMpsToKmh = 3.6;

// Linear interpolation between closest ranks.
double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::array<double, kNumHandcraftedFeatures> handcrafted_features(const Segment& seg) {
  std::array<double, kNumHandcraftedFeatures> f{};
  const std::size_t n = std::min(seg.n_valid, seg.length);
  if (n == 0) return f;
  std::vector<double> speed(n);
  double dist = 0.0, time = 0.0, brate = 0.0;
  double amax = -INFINITY, amin = INFINITY;
  for (std::size_t r = 0; r < n; ++r) {
    speed[r] = seg.at(r, speed_mps) * kMpsToKmh;
    dist += seg.at(r, distance_m);
    if (seg.at(r, speed_mps) > 0.0) time += seg.at(r, distance_m) / seg.at(r, speed_mps);
    amax = std::max(amax, seg.at(r, accel_mps2));
    amin = std::min(amin, seg.at(r, accel_mps2));
    brate += seg.at(r, bearing_rate_deg);
  }
  double mean = 0.0;
  for (double s : speed) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : speed) var += (s - mean) * (s - mean);
  f[0] = mean;
  f[1] = percentile(speed, 0.85);
  f[2] = *std::max_element(speed.begin(), speed.end());
  f[3] = amax;
  f[4] = amin;
  f[5] = time;
  f[6] = dist;
  f[7] = brate / static_cast<double>(n);
  f[8] = std::sqrt(var / static_cast<double>(n));
  return f;
}

forest::FeatureMatrix handcrafted_matrix(const std::vector<Segment>& segs, std::span<const std::size_t> indices) {
  forest::FeatureMatrix m(indices.size(), kNumHandcraftedFeatures);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto f = handcrafted_features(segs.at(indices[i]));
    std::copy(f.begin(), f.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * kNumHandcraftedFeatures));
  }
  return m;
}

forest::ForestConfig decision_tree_baseline(std::uint64_t seed) {
  forest::ForestConfig c;
  c.n_trees = 1;
  c.max_features = kNumHandcraftedFeatures;
  c.min_node_size = 20;
  c.bootstrap = false;
  c.seed = seed;
  return c;
}

forest::ForestConfig random_forest_baseline(std::uint64_t seed) {
  forest::ForestConfig c;
  c.n_trees = 1000;
  c.seed = seed;
  return c;
}

}  // namespace trajmode
