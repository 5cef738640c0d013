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

#include "trajmode/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace trajmode {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double normalize_degrees(double d) {
  double r = std::fmod(d, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round back up to exactly 360.
  if (r >= 360.0) r = 0.0;
  return r;
}

}  // namespace

bool valid_coordinates(const GpsPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

Angle::Angle(double degrees) : deg_(normalize_degrees(degrees)) {}

double haversine_distance(const GpsPoint& a, const GpsPoint& b) {
  if (a.lat == b.lat && a.lon == b.lon) return 0.0;
  // Order the operands so the result is bitwise symmetric.
  const bool swap = std::tie(a.lat, a.lon) > std::tie(b.lat, b.lon);
  const GpsPoint& p = swap ? b : a;
  const GpsPoint& q = swap ? a : b;
  const double lat1 = p.lat * kDegToRad;
  const double lat2 = q.lat * kDegToRad;
  const double dlat = (q.lat - p.lat) * kDegToRad;
  const double dlon = (q.lon - p.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

Angle bearing(const GpsPoint& p1, const GpsPoint& p2) {
  if (p1.lat == p2.lat && p1.lon == p2.lon) return Angle(0.0);
  const double lat1 = p1.lat * kDegToRad;
  const double lat2 = p2.lat * kDegToRad;
  const double dlon = (p2.lon - p1.lon) * kDegToRad;
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  const double y = std::sin(dlon) * std::cos(lat2);
  return Angle(std::atan2(y, x) * kRadToDeg);
}

double bearing_rate(Angle first, Angle second, BearingRateMode mode) {
  const double d = std::fabs(second.degrees() - first.degrees());
  if (mode == BearingRateMode::wrap) return std::min(d, 360.0 - d);
  return d;
}

double bearing_rate(const GpsPoint& p1, const GpsPoint& p2, const GpsPoint& p3, BearingRateMode mode) {
  return bearing_rate(bearing(p1, p2), bearing(p2, p3), mode);
}

GpsPoint destination_point(const GpsPoint& origin, double bearing_deg, double distance_m) {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = bearing_deg * kDegToRad;
  const double lat1 = origin.lat * kDegToRad;
  const double lon1 = origin.lon * kDegToRad;
  const double sin_lat2 = std::sin(lat1) * std::cos(delta) + std::cos(lat1) * std::sin(delta) * std::cos(theta);
  const double lat2 = std::asin(std::clamp(sin_lat2, -1.0, 1.0));
  const double lon2 = lon1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(lat1),
                                        std::cos(delta) - std::sin(lat1) * sin_lat2);
  double lon_deg = lon2 * kRadToDeg;
  lon_deg = std::fmod(lon_deg + 540.0, 360.0) - 180.0;
  return GpsPoint{origin.timestamp, lat2 * kRadToDeg, lon_deg};
}

}  // namespace trajmode
