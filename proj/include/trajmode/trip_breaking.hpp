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

#include <optional>
#include <string>
#include <vector>

#include "trajmode/common.hpp"
#include "trajmode/geo.hpp"

namespace trajmode {

struct Trip {
  std::string user_id;
  std::vector<GpsPoint> points;
  std::optional<Mode> mode;
};

struct Landmark {
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
};

struct TransitInfrastructure {
  std::vector<Landmark> metro_stations;
  std::vector<Landmark> bus_intersections;
  double max_metro_travel_s = 1800.0;
};

struct TripBreakConfig {
  std::int64_t gap_s = 180;
  double metro_radius_m = 300.0;
  double intersection_radius_m = 100.0;
  std::int64_t extended_gap_s = 600;
  /// Stitches implying a faster straight-line bridge than this are refused.
  double max_bridge_speed_mps = 36.0;
};

using PointRun = std::vector<GpsPoint>;

/// Splits wherever consecutive timestamps differ by more than gap_s.
std::vector<PointRun> split_on_gaps(const std::vector<GpsPoint>& points, std::int64_t gap_s = 180);

/// One left-to-right pass of the metro rule over adjacent runs.
std::vector<PointRun> stitch_metro(std::vector<PointRun> runs, const TransitInfrastructure& infra,
                                   const TripBreakConfig& config = {});

/// One left-to-right pass of the bus-intersection rule over adjacent runs.
std::vector<PointRun> stitch_intersection(std::vector<PointRun> runs, const TransitInfrastructure& infra,
                                          const TripBreakConfig& config = {});

/// split -> (metro, intersection) until fixpoint -> drop runs shorter than 2 points.
std::vector<Trip> break_trips(const std::vector<GpsPoint>& points, const TransitInfrastructure& infra,
                              const TripBreakConfig& config = {}, const std::string& user_id = {});

}  // namespace trajmode
