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

#include "trajmode/gps_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace trajmode {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    fail(ErrorKind::data, std::string("bad ") + what + " value '" + s + "'");
  return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::vector<std::string> read_header(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::data, std::string("empty ") + what + " file");
  return split_csv(line);
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) fail(ErrorKind::data, "empty timestamp");
  std::int64_t epoch = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), epoch);
  if (res.ec == std::errc{} && res.ptr == text.data() + text.size()) return epoch;

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed) < 6 ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60)
    fail(ErrorKind::data, "unparseable timestamp '" + text + "'");
  std::size_t pos = static_cast<std::size_t>(consumed);
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  std::int64_t offset = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if ((sign == '+' || sign == '-') && text.size() - pos >= 5) {
      int oh = 0, om = 0;
      if (std::sscanf(text.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2 &&
          std::sscanf(text.c_str() + pos + 1, "%2d%2d", &oh, &om) != 2)
        fail(ErrorKind::data, "bad UTC offset in '" + text + "'");
      offset = (sign == '+' ? 1 : -1) * (oh * 3600 + om * 60);
    } else {
      fail(ErrorKind::data, "trailing characters in timestamp '" + text + "'");
    }
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 + mi * 60 + s -
         offset;
}

std::vector<GpsRecord> read_gps_csv(std::istream& is) {
  const auto header = read_header(is, "GPS CSV");
  const bool has_mode = header.size() == 5 && header[4] == "mode";
  if (header.size() < 4 || header[0] != "user_id" || header[1] != "timestamp" || header[2] != "lat" ||
      header[3] != "lon" || (header.size() == 5 && !has_mode) || header.size() > 5)
    fail(ErrorKind::data, "GPS CSV header must be user_id,timestamp,lat,lon[,mode]");
  std::vector<GpsRecord> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 4 || f.size() > header.size())
      fail(ErrorKind::data, "GPS CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    GpsRecord r;
    r.user_id = f[0];
    r.point.timestamp = parse_timestamp(f[1]);
    r.point.lat = parse_real(f[2], "lat");
    r.point.lon = parse_real(f[3], "lon");
    if (!valid_coordinates(r.point)) fail(ErrorKind::data, "GPS CSV line " + std::to_string(line_no) + ": invalid coordinates");
    if (has_mode && f.size() == 5 && !f[4].empty()) {
      r.mode = parse_mode(f[4]);
      if (!r.mode) fail(ErrorKind::data, "GPS CSV line " + std::to_string(line_no) + ": unknown mode '" + f[4] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<GpsRecord> read_gps_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::data, "cannot read GPS input " + path);
  return read_gps_csv(is);
}

void write_gps_csv(std::ostream& os, const std::vector<Trip>& trips) {
  const bool labeled = std::any_of(trips.begin(), trips.end(), [](const Trip& t) { return t.mode.has_value(); });
  os << "user_id,timestamp,lat,lon" << (labeled ? ",mode" : "") << '\n';
  char buf[96];
  for (const auto& t : trips) {
    for (const auto& p : t.points) {
      std::snprintf(buf, sizeof buf, "%lld,%.9f,%.9f", static_cast<long long>(p.timestamp), p.lat, p.lon);
      os << t.user_id << ',' << buf;
      if (labeled) os << ',' << (t.mode ? mode_name(*t.mode) : "");
      os << '\n';
    }
  }
}

TransitInfrastructure read_infrastructure_csv(std::istream& is) {
  const auto header = read_header(is, "infrastructure CSV");
  if (header.size() != 4 || header[0] != "name" || header[1] != "lat" || header[2] != "lon" || header[3] != "kind")
    fail(ErrorKind::data, "infrastructure CSV header must be name,lat,lon,kind");
  TransitInfrastructure infra;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) fail(ErrorKind::data, "infrastructure CSV row needs 4 fields: " + line);
    Landmark m{f[0], parse_real(f[1], "lat"), parse_real(f[2], "lon")};
    if (!valid_coordinates(GpsPoint{0, m.lat, m.lon})) fail(ErrorKind::data, "invalid landmark coordinates: " + line);
    if (f[3] == "metro") infra.metro_stations.push_back(std::move(m));
    else if (f[3] == "intersection") infra.bus_intersections.push_back(std::move(m));
    else fail(ErrorKind::data, "landmark kind must be metro or intersection: " + line);
  }
  return infra;
}

TransitInfrastructure read_infrastructure_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::data, "cannot read infrastructure file " + path);
  return read_infrastructure_csv(is);
}

void write_infrastructure_csv(std::ostream& os, const TransitInfrastructure& infra) {
  os << "name,lat,lon,kind\n";
  char buf[64];
  for (const auto& m : infra.metro_stations) {
    std::snprintf(buf, sizeof buf, "%.9f,%.9f", m.lat, m.lon);
    os << m.name << ',' << buf << ",metro\n";
  }
  for (const auto& m : infra.bus_intersections) {
    std::snprintf(buf, sizeof buf, "%.9f,%.9f", m.lat, m.lon);
    os << m.name << ',' << buf << ",intersection\n";
  }
}

std::vector<UserStream> group_by_user(const std::vector<GpsRecord>& records) {
  std::vector<UserStream> streams;
  std::map<std::string, std::size_t> where;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = where.emplace(records[i].user_id, streams.size());
    if (inserted) {
      streams.push_back(UserStream{records[i].user_id, {}, {}});
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }
  for (std::size_t u = 0; u < streams.size(); ++u) {
    auto& idx = members[u];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return records[a].point.timestamp < records[b].point.timestamp;
    });
    for (auto i : idx) {
      if (!streams[u].points.empty() && streams[u].points.back().timestamp == records[i].point.timestamp) continue;
      streams[u].points.push_back(records[i].point);
      streams[u].modes.push_back(records[i].mode);
    }
  }
  return streams;
}

std::optional<Mode> majority_point_label(const UserStream& stream, const Trip& trip) {
  if (trip.points.empty()) return std::nullopt;
  // Trips are contiguous, time-ordered slices of the stream.
  const auto first = std::lower_bound(stream.points.begin(), stream.points.end(), trip.points.front().timestamp,
                                      [](const GpsPoint& p, std::int64_t t) { return p.timestamp < t; });
  auto pos = static_cast<std::size_t>(first - stream.points.begin());
  std::array<std::size_t, kNumModes> votes{};
  bool any = false;
  for (std::size_t k = 0; k < trip.points.size() && pos + k < stream.points.size(); ++k) {
    if (const auto& m = stream.modes[pos + k]) {
      ++votes[static_cast<std::size_t>(mode_index(*m))];
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return static_cast<Mode>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace trajmode
