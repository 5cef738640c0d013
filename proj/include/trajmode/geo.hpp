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

#include <cstdint>

namespace trajmode {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GpsPoint {
  std::int64_t timestamp = 0;  // seconds since epoch
  double lat = 0.0;            // degrees
  double lon = 0.0;            // degrees

  friend bool operator==(const GpsPoint&, const GpsPoint&) = default;
};

bool valid_coordinates(const GpsPoint& p);

/// Compass angle in degrees, always in [0, 360).
class Angle {
 public:
  Angle() = default;
  explicit Angle(double degrees);
  double degrees() const { return deg_; }

 private:
  double deg_ = 0.0;
};

enum class BearingRateMode { literal, wrap };

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_distance(const GpsPoint& a, const GpsPoint& b);

/// Initial great-circle bearing from p1 toward p2. Coincident points give 0.
Angle bearing(const GpsPoint& p1, const GpsPoint& p2);

/// |bearing(p2,p3) - bearing(p1,p2)|. Wrap mode folds the result into [0, 180].
double bearing_rate(const GpsPoint& p1, const GpsPoint& p2, const GpsPoint& p3,
                    BearingRateMode mode = BearingRateMode::literal);

double bearing_rate(Angle first, Angle second, BearingRateMode mode = BearingRateMode::literal);

/// Point reached travelling distance_m from origin along initial bearing (degrees).
GpsPoint destination_point(const GpsPoint& origin, double bearing_deg, double distance_m);

}  // namespace trajmode
