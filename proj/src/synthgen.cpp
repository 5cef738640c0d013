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

#include "trajmode/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "trajmode/rng.hpp"

namespace trajmode {

std::vector<ModeProfile> default_profiles() {
  return {
      {Mode::walk, 0.5, 2.5, 0.3, 25.0, 0.01, 1, 5},
      {Mode::bike, 2.0, 8.0, 0.5, 12.0, 0.01, 1, 5},
      {Mode::transit, 0.0, 15.0, 0.6, 4.0, 0.06, 1, 5},
      {Mode::car, 0.0, 25.0, 1.0, 3.0, 0.015, 1, 5},
  };
}

Trip generate_trip(const ModeProfile& profile, std::size_t n_points, const GpsPoint& origin, std::uint64_t seed) {
  require(n_points >= 10, "generate_trip needs at least 10 points");
  require(profile.speed_lo_mps >= 0.0 && profile.speed_lo_mps < profile.speed_hi_mps, "invalid speed range");
  require(profile.accel_std_mps2 >= 0.0 && profile.heading_change_std_deg >= 0.0, "negative noise level");
  require(profile.interval_lo_s >= 1 && profile.interval_lo_s <= profile.interval_hi_s, "invalid sample interval");
  Rng rng(seed);
  Trip trip;
  trip.mode = profile.mode;
  trip.points.reserve(n_points);
  trip.points.push_back(origin);

  const double lo = profile.speed_lo_mps, hi = profile.speed_hi_mps;
  double speed = uniform(rng, lo, hi);
  double target = uniform(rng, lo, hi);
  double heading = uniform(rng, 0.0, 360.0);
  int dwell = 0;  // remaining stopped steps

  for (std::size_t i = 1; i < n_points; ++i) {
    const auto dt = profile.interval_lo_s +
                    static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(
                                                                     profile.interval_hi_s - profile.interval_lo_s + 1)));
    const double fdt = static_cast<double>(dt);
    if (dwell == 0 && uniform01(rng) < profile.stop_probability) dwell = 2 + static_cast<int>(uniform_index(rng, 6));
    if (uniform01(rng) < 0.05) target = uniform(rng, lo, hi);

    double goal = dwell > 0 ? 0.0 : target;
    double accel = 0.3 * (goal - speed) / fdt + profile.accel_std_mps2 * standard_normal(rng);
    if (dwell > 0) accel = (goal - speed) / fdt;
    accel = std::clamp(accel, -kGeneratorMaxAccel, kGeneratorMaxAccel);
    speed += accel * fdt;
    speed = std::clamp(speed, dwell > 0 ? 0.0 : lo, hi);
    if (dwell > 0 && speed == 0.0) --dwell;

    heading += profile.heading_change_std_deg * standard_normal(rng);
    const auto& prev = trip.points.back();
    GpsPoint next = destination_point(prev, heading, speed * fdt);
    next.timestamp = prev.timestamp + dt;
    trip.points.push_back(next);
  }
  return trip;
}

std::vector<Trip> generate_dataset(const std::vector<ModeProfile>& profiles, std::size_t trips_per_mode,
                                   std::uint64_t seed, const DatasetOptions& options) {
  require(trips_per_mode >= 1, "trips_per_mode must be >= 1");
  require(options.min_points >= 10 && options.min_points <= options.max_points, "invalid trip length range");
  std::vector<Trip> trips;
  trips.reserve(profiles.size() * trips_per_mode);
  std::uint64_t serial = 0;
  for (const auto& prof : profiles) {
    for (std::size_t t = 0; t < trips_per_mode; ++t, ++serial) {
      const auto trip_seed = derive_seed(seed, serial);
      Rng rng(derive_seed(trip_seed, 7));
      const auto n = options.min_points +
                     static_cast<std::size_t>(uniform_index(rng, options.max_points - options.min_points + 1));
      GpsPoint origin = options.origin;
      origin.lat += uniform(rng, -options.origin_jitter_deg, options.origin_jitter_deg);
      origin.lon += uniform(rng, -options.origin_jitter_deg, options.origin_jitter_deg);
      origin.timestamp += static_cast<std::int64_t>(serial) * 86400;
      Trip trip = generate_trip(prof, n, origin, trip_seed);
      char id[32];
      std::snprintf(id, sizeof id, "u%05llu", static_cast<unsigned long long>(serial));
      trip.user_id = id;
      trips.push_back(std::move(trip));
    }
  }
  return trips;
}

}  // namespace trajmode
