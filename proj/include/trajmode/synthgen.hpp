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

// Seeded synthetic labeled trajectories for desk-scale experiments.

#include <cstdint>
#include <vector>

#include "trajmode/trip_breaking.hpp"

namespace trajmode {

struct ModeProfile {
  Mode mode = Mode::walk;
  double speed_lo_mps = 0.5;
  double speed_hi_mps = 2.5;
  double accel_std_mps2 = 0.3;
  double heading_change_std_deg = 20.0;
  double stop_probability = 0.0;  // chance per step of starting a stop
  std::int64_t interval_lo_s = 1;
  std::int64_t interval_hi_s = 5;
};

/// walk, bike, transit, car in class order.
std::vector<ModeProfile> default_profiles();

/// Hard cap used by the generator; stays well below the default filter bound.
inline constexpr double kGeneratorMaxAccel = 3.0;

Trip generate_trip(const ModeProfile& profile, std::size_t n_points, const GpsPoint& origin, std::uint64_t seed);

struct DatasetOptions {
  std::size_t min_points = 40;
  std::size_t max_points = 140;
  GpsPoint origin{1475000000, 45.5017, -73.5673};
  double origin_jitter_deg = 0.05;
};

/// trips_per_mode trips for each profile, grouped by profile. Each trip gets
/// its own user id and start time.
std::vector<Trip> generate_dataset(const std::vector<ModeProfile>& profiles, std::size_t trips_per_mode,
                                   std::uint64_t seed, const DatasetOptions& options = {});

}  // namespace trajmode
