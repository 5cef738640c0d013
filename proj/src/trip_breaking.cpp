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

#include "trajmode/trip_breaking.hpp"

#include <limits>

namespace trajmode {

namespace {

double nearest_distance(const GpsPoint& p, const std::vector<Landmark>& marks, std::size_t* which) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const double d = haversine_distance(p, GpsPoint{0, marks[i].lat, marks[i].lon});
    if (d < best) {
      best = d;
      if (which) *which = i;
    }
  }
  return best;
}

bool bridge_plausible(const GpsPoint& end, const GpsPoint& start, const TripBreakConfig& config) {
  const auto gap = static_cast<double>(start.timestamp - end.timestamp);
  if (gap <= 0.0) return false;
  return haversine_distance(end, start) / gap <= config.max_bridge_speed_mps;
}

template <class ShouldJoin>
std::vector<PointRun> merge_adjacent(std::vector<PointRun> runs, ShouldJoin should_join) {
  std::vector<PointRun> out;
  out.reserve(runs.size());
  for (auto& run : runs) {
    if (run.empty()) continue;
    if (!out.empty() && should_join(out.back().back(), run.front())) {
      out.back().insert(out.back().end(), run.begin(), run.end());
    } else {
      out.push_back(std::move(run));
    }
  }
  return out;
}

}  // namespace

std::vector<PointRun> split_on_gaps(const std::vector<GpsPoint>& points, std::int64_t gap_s) {
  std::vector<PointRun> runs;
  for (const auto& p : points) {
    if (runs.empty() || p.timestamp - runs.back().back().timestamp > gap_s) runs.emplace_back();
    runs.back().push_back(p);
  }
  return runs;
}

std::vector<PointRun> stitch_metro(std::vector<PointRun> runs, const TransitInfrastructure& infra,
                                   const TripBreakConfig& config) {
  if (infra.metro_stations.empty()) return runs;
  return merge_adjacent(std::move(runs), [&](const GpsPoint& end, const GpsPoint& start) {
    const auto gap = static_cast<double>(start.timestamp - end.timestamp);
    return gap < infra.max_metro_travel_s &&
           nearest_distance(end, infra.metro_stations, nullptr) <= config.metro_radius_m &&
           nearest_distance(start, infra.metro_stations, nullptr) <= config.metro_radius_m &&
           bridge_plausible(end, start, config);
  });
}

std::vector<PointRun> stitch_intersection(std::vector<PointRun> runs, const TransitInfrastructure& infra,
                                          const TripBreakConfig& config) {
  const auto& marks = infra.bus_intersections;
  if (marks.empty()) return runs;
  return merge_adjacent(std::move(runs), [&](const GpsPoint& end, const GpsPoint& start) {
    if (start.timestamp - end.timestamp > config.extended_gap_s) return false;
    // Both boundary points must sit inside the radius of one common intersection.
    for (const auto& m : marks) {
      const GpsPoint c{0, m.lat, m.lon};
      if (haversine_distance(end, c) <= config.intersection_radius_m &&
          haversine_distance(start, c) <= config.intersection_radius_m)
        return bridge_plausible(end, start, config);
    }
    return false;
  });
}

std::vector<Trip> break_trips(const std::vector<GpsPoint>& points, const TransitInfrastructure& infra,
                              const TripBreakConfig& config, const std::string& user_id) {
  auto runs = split_on_gaps(points, config.gap_s);
  for (;;) {
    const auto before = runs.size();
    runs = stitch_metro(std::move(runs), infra, config);
    runs = stitch_intersection(std::move(runs), infra, config);
    if (runs.size() == before) break;
  }
  std::vector<Trip> trips;
  for (auto& run : runs) {
    if (run.size() < 2) continue;
    trips.push_back(Trip{user_id, std::move(run), std::nullopt});
  }
  return trips;
}

}  // namespace trajmode
