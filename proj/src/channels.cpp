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

#include "trajmode/channels.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trajmode/binio.hpp"

namespace trajmode {

std::vector<GpsPoint> dedupe_timestamps(const std::vector<GpsPoint>& points) {
  std::vector<GpsPoint> out;
  out.reserve(points.size());
  for (const auto& p : points)
    if (out.empty() || p.timestamp > out.back().timestamp) out.push_back(p);
  return out;
}

std::vector<ChannelRow> compute_channels(const Trip& trip, const ChannelConfig& config) {
  const auto pts = dedupe_timestamps(trip.points);
  std::vector<ChannelRow> rows(pts.size(), ChannelRow{});
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto dt = static_cast<double>(pts[i].timestamp - pts[i - 1].timestamp);
    auto& r = rows[i];
    const auto& prev = rows[i - 1];
    r[distance_m] = haversine_distance(pts[i - 1], pts[i]);
    r[speed_mps] = r[distance_m] / dt;
    r[accel_mps2] = (r[speed_mps] - prev[speed_mps]) / dt;
    r[jerk_mps3] = (r[accel_mps2] - prev[accel_mps2]) / dt;
    if (i + 1 < pts.size()) r[bearing_rate_deg] = bearing_rate(pts[i - 1], pts[i], pts[i + 1], config.bearing_mode);
  }
  return rows;
}

namespace {

// First index violating the speed or acceleration bound, or 0 if clean.
std::size_t first_outlier(const std::vector<GpsPoint>& pts, const FilterConfig& config) {
  double prev_speed = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto dt = static_cast<double>(pts[i].timestamp - pts[i - 1].timestamp);
    const double speed = haversine_distance(pts[i - 1], pts[i]) / dt;
    if (speed > config.max_speed_mps) return i;
    // Acceleration is only defined once two measured speeds exist.
    if (i >= 2 && std::fabs(speed - prev_speed) / dt > config.max_accel_mps2) return i;
    prev_speed = speed;
  }
  return 0;
}

}  // namespace

std::optional<Trip> filter_trajectory(const Trip& trip, const FilterConfig& config) {
  Trip out{trip.user_id, dedupe_timestamps(trip.points), trip.mode};
  while (out.points.size() >= config.min_points) {
    const auto bad = first_outlier(out.points, config);
    if (bad == 0) break;
    out.points.erase(out.points.begin() + static_cast<std::ptrdiff_t>(bad));
  }
  if (out.points.size() < config.min_points) return std::nullopt;
  return out;
}

std::vector<Segment> build_segments(const std::vector<ChannelRow>& rows, std::optional<Mode> label,
                                    std::size_t length) {
  require(length > 0, "segment length must be positive");
  std::vector<Segment> segs;
  for (std::size_t start = 0; start < rows.size(); start += length) {
    Segment s;
    s.length = length;
    s.label = label;
    s.values.assign(length * kNumChannels, 0.0);
    s.n_valid = std::min(length, rows.size() - start);
    for (std::size_t r = 0; r < s.n_valid; ++r)
      for (std::size_t c = 0; c < kNumChannels; ++c) s.values[r * kNumChannels + c] = rows[start + r][c];
    segs.push_back(std::move(s));
  }
  return segs;
}

std::vector<Segment> build_segments(const Trip& trip, std::size_t length, const ChannelConfig& config) {
  return build_segments(compute_channels(trip, config), trip.mode, length);
}

namespace {

void append_double(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

std::optional<Mode> parse_label(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (auto m = parse_mode(s)) return m;
  fail(ErrorKind::data, "unknown mode label '" + s + "' in segment file");
}

}  // namespace

void write_segments_csv(std::ostream& os, const std::vector<Segment>& segs) {
  const std::size_t length = segs.empty() ? kDefaultSegmentLength : segs.front().length;
  std::string line = "label,n_valid";
  for (std::size_t i = 0; i < length * kNumChannels; ++i) line += ",v" + std::to_string(i);
  os << line << '\n';
  for (const auto& s : segs) {
    require(s.length == length, "all segments in one file must share a length");
    line.clear();
    if (s.label) line += mode_name(*s.label);
    line += ',';
    line += std::to_string(s.n_valid);
    for (double v : s.values) {
      line += ',';
      append_double(line, v);
    }
    os << line << '\n';
  }
}

std::vector<Segment> read_segments_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::data, "empty segment CSV");
  std::size_t n_fields = 1;
  for (char c : line) n_fields += (c == ',');
  if (n_fields < 2 + kNumChannels || (n_fields - 2) % kNumChannels != 0)
    fail(ErrorKind::data, "segment CSV header has an invalid column count");
  const std::size_t length = (n_fields - 2) / kNumChannels;
  std::vector<Segment> segs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Segment s;
    s.length = length;
    s.values.reserve(length * kNumChannels);
    std::size_t pos = 0;
    auto next_field = [&]() {
      const auto end = line.find(',', pos);
      std::string f = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      pos = end == std::string::npos ? line.size() + 1 : end + 1;
      return f;
    };
    s.label = parse_label(next_field());
    s.n_valid = std::stoul(next_field());
    for (std::size_t i = 0; i < length * kNumChannels; ++i) {
      if (pos > line.size()) fail(ErrorKind::data, "segment CSV row is short");
      const auto f = next_field();
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{}) fail(ErrorKind::data, "bad number '" + f + "' in segment CSV");
      s.values.push_back(v);
    }
    if (s.n_valid > length) fail(ErrorKind::data, "n_valid exceeds segment length");
    segs.push_back(std::move(s));
  }
  return segs;
}

void write_segments_binary(std::ostream& os, const std::vector<Segment>& segs) {
  const std::size_t length = segs.empty() ? kDefaultSegmentLength : segs.front().length;
  binio::put_magic(os, "SEG1");
  binio::put_u8(os, 1);
  binio::put_u32(os, static_cast<std::uint32_t>(length));
  binio::put_u32(os, static_cast<std::uint32_t>(kNumChannels));
  binio::put_u64(os, segs.size());
  for (const auto& s : segs) {
    require(s.length == length, "all segments in one file must share a length");
    binio::put_i32(os, s.label ? mode_index(*s.label) : -1);
    binio::put_u32(os, static_cast<std::uint32_t>(s.n_valid));
    for (double v : s.values) binio::put_f64(os, v);
  }
}

std::vector<Segment> read_segments_binary(std::istream& is) {
  binio::expect_magic(is, "SEG1");
  if (binio::get_u8(is) != 1) fail(ErrorKind::data, "unsupported SEG1 version");
  const std::size_t length = binio::get_u32(is);
  const std::size_t channels = binio::get_u32(is);
  if (channels != kNumChannels || length == 0) fail(ErrorKind::data, "SEG1 shape mismatch");
  const auto count = binio::get_u64(is);
  std::vector<Segment> segs;
  segs.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Segment s;
    s.length = length;
    const auto label = binio::get_i32(is);
    if (label >= 0) s.label = mode_from_index(label);
    s.n_valid = binio::get_u32(is);
    if (s.n_valid > length) fail(ErrorKind::data, "n_valid exceeds segment length");
    s.values.resize(length * kNumChannels);
    for (auto& v : s.values) v = binio::get_f64(is);
    segs.push_back(std::move(s));
  }
  return segs;
}

void save_segments(const std::string& path, const std::vector<Segment>& segs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::data, "cannot write " + path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    write_segments_csv(os, segs);
  else
    write_segments_binary(os, segs);
  if (!os) fail(ErrorKind::data, "write failed for " + path);
}

std::vector<Segment> load_segments(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "cannot read " + path);
  char magic[4] = {};
  is.read(magic, 4);
  is.clear();
  is.seekg(0);
  if (std::string_view(magic, 4) == "SEG1") return read_segments_binary(is);
  return read_segments_csv(is);
}

}  // namespace trajmode
