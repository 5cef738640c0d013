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

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trajmode/common.hpp"
#include "trajmode/geo.hpp"
#include "trajmode/trip_breaking.hpp"

namespace trajmode {

inline constexpr std::size_t kNumChannels = 5;
inline constexpr std::size_t kDefaultSegmentLength = 70;

enum Channel : std::size_t { distance_m = 0, speed_mps = 1, accel_mps2 = 2, jerk_mps3 = 3, bearing_rate_deg = 4 };

using ChannelRow = std::array<double, kNumChannels>;

/// One classifier example: length x 5 values, row-major, rows >= n_valid are zero.
struct Segment {
  std::size_t length = kDefaultSegmentLength;
  std::vector<double> values;
  std::optional<Mode> label;
  std::size_t n_valid = 0;

  double at(std::size_t row, std::size_t ch) const { return values[row * kNumChannels + ch]; }
};

struct FilterConfig {
  std::size_t min_points = 10;
  double max_speed_mps = 62.5;
  double max_accel_mps2 = 10.0;
};

struct ChannelConfig {
  BearingRateMode bearing_mode = BearingRateMode::literal;
};

/// Drops later points that share a timestamp with their predecessor.
std::vector<GpsPoint> dedupe_timestamps(const std::vector<GpsPoint>& points);

/// Per-point channel rows. Values without enough history start from zero.
std::vector<ChannelRow> compute_channels(const Trip& trip, const ChannelConfig& config = {});

/// Removes speed/acceleration outliers until none remain; nullopt when fewer than
/// min_points survive.
std::optional<Trip> filter_trajectory(const Trip& trip, const FilterConfig& config = {});

/// Non-overlapping windows of `length` rows, tail zero-padded.
std::vector<Segment> build_segments(const std::vector<ChannelRow>& rows, std::optional<Mode> label,
                                    std::size_t length = kDefaultSegmentLength);

std::vector<Segment> build_segments(const Trip& trip, std::size_t length = kDefaultSegmentLength,
                                    const ChannelConfig& config = {});

// Segment dataset persistence. Both forms store the rows verbatim.
void write_segments_csv(std::ostream& os, const std::vector<Segment>& segs);
std::vector<Segment> read_segments_csv(std::istream& is);
void write_segments_binary(std::ostream& os, const std::vector<Segment>& segs);
std::vector<Segment> read_segments_binary(std::istream& is);

void save_segments(const std::string& path, const std::vector<Segment>& segs);
/// Detects the binary form by its SEG1 magic, otherwise parses CSV.
std::vector<Segment> load_segments(const std::string& path);

}  // namespace trajmode
