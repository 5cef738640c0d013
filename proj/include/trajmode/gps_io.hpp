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

// CSV ingestion: GPS streams (user_id,timestamp,lat,lon[,mode]) and transit
// infrastructure (name,lat,lon,kind).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trajmode/trip_breaking.hpp"

namespace trajmode {

struct GpsRecord {
  std::string user_id;
  GpsPoint point;
  std::optional<Mode> mode;
};

/// Integer epoch seconds or ISO-8601 "YYYY-MM-DDTHH:MM:SS" with optional
/// fractional seconds and a Z / +hh:mm / -hh:mm suffix.
std::int64_t parse_timestamp(const std::string& text);

std::vector<GpsRecord> read_gps_csv(std::istream& is);
std::vector<GpsRecord> read_gps_csv(const std::string& path);

/// One row per point; the mode column is written when any trip is labeled.
void write_gps_csv(std::ostream& os, const std::vector<Trip>& trips);

TransitInfrastructure read_infrastructure_csv(std::istream& is);
TransitInfrastructure read_infrastructure_csv(const std::string& path);
void write_infrastructure_csv(std::ostream& os, const TransitInfrastructure& infra);

struct UserStream {
  std::string user_id;
  std::vector<GpsPoint> points;
  std::vector<std::optional<Mode>> modes;  // parallel to points
};

/// Groups by user (first-appearance order) and sorts each stream by time.
/// Points repeating a timestamp within a user are dropped.
std::vector<UserStream> group_by_user(const std::vector<GpsRecord>& records);

/// Majority mode label over the points of one trip (ties to lower index);
/// nullopt if no point is labeled.
std::optional<Mode> majority_point_label(const UserStream& stream, const Trip& trip);

}  // namespace trajmode
