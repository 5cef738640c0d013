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

#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "trajmode/binio.hpp"
#include "trajmode/channels.hpp"
#include "trajmode/rng.hpp"

using namespace trajmode;

namespace {

// Straight line heading north, `step_m` metres every `dt` seconds.
Trip line_trip(std::size_t n, double step_m = 10.0, std::int64_t dt = 1, Mode mode = Mode::walk) {
  Trip t{"u", {}, mode};
  GpsPoint p{1000, 45.0, -73.0};
  for (std::size_t i = 0; i < n; ++i) {
    t.points.push_back(p);
    p = destination_point(p, 0.0, step_m);
    p.timestamp = t.points.back().timestamp + dt;
  }
  return t;
}

Trip random_trip(Rng& rng, std::size_t n) {
  Trip t{"r", {}, Mode::car};
  GpsPoint p{0, uniform(rng, -60, 60), uniform(rng, -170, 170)};
  double heading = uniform(rng, 0, 360);
  for (std::size_t i = 0; i < n; ++i) {
    t.points.push_back(p);
    heading += uniform(rng, -40, 40);
    p = destination_point(p, heading, uniform(rng, 0, 30));
    p.timestamp = t.points.back().timestamp + 1 + static_cast<std::int64_t>(uniform_index(rng, 5));
  }
  return t;
}

}  // namespace

TEST_CASE("two points 100 m and 10 s apart") {
  Trip t{"u", {{0, 45.0, -73.0}, {10, 0, 0}}, std::nullopt};
  t.points[1] = destination_point(t.points[0], 90.0, 100.0);
  t.points[1].timestamp = 10;
  const auto rows = compute_channels(t);
  REQUIRE(rows.size() == 2);
  for (double v : rows[0]) CHECK(v == 0.0);
  CHECK(rows[1][distance_m] == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(rows[1][speed_mps] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(rows[1][accel_mps2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rows[1][jerk_mps3] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(rows[1][bearing_rate_deg] == 0.0);  // no successor
}

TEST_CASE("channel recurrences against hand arithmetic") {
  // Speeds 10, 20, 20 m/s with 1 s, 2 s, 1 s steps.
  GpsPoint p0{0, 10.0, 20.0};
  auto p1 = destination_point(p0, 0.0, 10.0);
  p1.timestamp = 1;
  auto p2 = destination_point(p1, 0.0, 40.0);
  p2.timestamp = 3;
  auto p3 = destination_point(p2, 0.0, 20.0);
  p3.timestamp = 4;
  const auto rows = compute_channels(Trip{"u", {p0, p1, p2, p3}, std::nullopt});
  CHECK(rows[2][speed_mps] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(rows[2][accel_mps2] == doctest::Approx(5.0).epsilon(1e-9));   // (20 - 10) / 2
  CHECK(rows[2][jerk_mps3] == doctest::Approx(-2.5).epsilon(1e-9));   // (5 - 10) / 2
  CHECK(rows[3][accel_mps2] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rows[3][jerk_mps3] == doctest::Approx(-5.0).epsilon(1e-9));
  CHECK(std::abs(rows[1][bearing_rate_deg]) < 1e-6);
}

TEST_CASE("stationary trip has zero channels") {
  Trip t{"u", {}, std::nullopt};
  for (int i = 0; i < 12; ++i) t.points.push_back({i * 5, 45.0, -73.0});
  for (const auto& r : compute_channels(t))
    for (double v : r) CHECK(v == 0.0);
}

TEST_CASE("bearing rate sits on the middle point") {
  // North then east: a 90 degree turn at point 1.
  GpsPoint a{0, 0.0, 0.0};
  auto b = destination_point(a, 0.0, 100.0);
  b.timestamp = 10;
  auto c = destination_point(b, 90.0, 100.0);
  c.timestamp = 20;
  const auto rows = compute_channels(Trip{"u", {a, b, c}, std::nullopt});
  CHECK(rows[0][bearing_rate_deg] == 0.0);
  CHECK(rows[1][bearing_rate_deg] == doctest::Approx(90.0).epsilon(1e-6));
  CHECK(rows[2][bearing_rate_deg] == 0.0);
}

TEST_CASE("wrap mode folds the bearing rate") {
  // Heading 350 then 10 degrees: literal 340, wrapped 20.
  GpsPoint a{0, 0.0, 0.0};
  auto b = destination_point(a, 350.0, 100.0);
  b.timestamp = 10;
  auto c = destination_point(b, 10.0, 100.0);
  c.timestamp = 20;
  const Trip t{"u", {a, b, c}, std::nullopt};
  CHECK(compute_channels(t)[1][bearing_rate_deg] == doctest::Approx(340.0).epsilon(1e-4));
  CHECK(compute_channels(t, {BearingRateMode::wrap})[1][bearing_rate_deg] == doctest::Approx(20.0).epsilon(1e-4));
}

TEST_CASE("duplicate timestamps are removed before differencing") {
  auto t = line_trip(5);
  t.points.insert(t.points.begin() + 2, GpsPoint{t.points[1].timestamp, 0.0, 0.0});
  const auto d = dedupe_timestamps(t.points);
  CHECK(d.size() == 5);
  CHECK(d[1] == t.points[1]);
  for (const auto& r : compute_channels(t))
    for (double v : r) CHECK(std::isfinite(v));
}

TEST_CASE("filter rejects short trips and glitches") {
  CHECK_FALSE(filter_trajectory(line_trip(9)).has_value());
  CHECK(filter_trajectory(line_trip(10)).has_value());

  auto clean = line_trip(50, 1.5);
  const auto kept = filter_trajectory(clean);
  REQUIRE(kept);
  CHECK(kept->points == clean.points);

  auto glitch = clean;
  glitch.points[20] = destination_point(glitch.points[20], 90.0, 400.0);
  glitch.points[20].timestamp = clean.points[20].timestamp;
  const auto fixed = filter_trajectory(glitch);
  REQUIRE(fixed);
  CHECK(fixed->points.size() == 49);
  CHECK(std::find(fixed->points.begin(), fixed->points.end(), glitch.points[20]) == fixed->points.end());
  CHECK(fixed->mode == Mode::walk);
}

TEST_CASE("filter removes harsh acceleration") {
  // 2 m/s, then a jump to 30 m/s within one second (28 m/s^2).
  auto t = line_trip(30, 2.0);
  for (std::size_t i = 15; i < t.points.size(); ++i) {
    t.points[i] = destination_point(t.points[i - 1], 0.0, 30.0);
    t.points[i].timestamp = t.points[i - 1].timestamp + 1;
  }
  const auto f = filter_trajectory(t);
  REQUIRE(f);
  const auto rows = compute_channels(*f);
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::abs(rows[i][accel_mps2]) <= 10.0 + 1e-9);
}

TEST_CASE("segments of 150, 70 and 71 points") {
  auto segs = build_segments(line_trip(150));
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].n_valid == 70);
  CHECK(segs[1].n_valid == 70);
  CHECK(segs[2].n_valid == 10);
  for (std::size_t r = 10; r < 70; ++r)
    for (std::size_t c = 0; c < kNumChannels; ++c) CHECK(segs[2].at(r, c) == 0.0);
  for (const auto& s : segs) CHECK(s.label == Mode::walk);

  segs = build_segments(line_trip(70));
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].n_valid == 70);

  segs = build_segments(line_trip(71));
  REQUIRE(segs.size() == 2);
  CHECK(segs[1].n_valid == 1);
  for (std::size_t r = 1; r < 70; ++r)
    for (std::size_t c = 0; c < kNumChannels; ++c) CHECK(segs[1].at(r, c) == 0.0);
  CHECK(segs[1].at(0, speed_mps) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("segment length 120") {
  const auto segs = build_segments(line_trip(250), 120);
  REQUIRE(segs.size() == 3);
  CHECK(segs[2].n_valid == 10);
  CHECK(segs[0].values.size() == 120 * kNumChannels);
}

TEST_CASE("random trips conserve points and stay finite") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto t = random_trip(rng, 10 + uniform_index(rng, 300));
    const auto segs = build_segments(t);
    std::size_t sum = 0;
    for (const auto& s : segs) {
      sum += s.n_valid;
      for (std::size_t r = 0; r < s.length; ++r)
        for (std::size_t c = 0; c < kNumChannels; ++c) {
          REQUIRE(std::isfinite(s.at(r, c)));
          if (r >= s.n_valid) REQUIRE(s.at(r, c) == 0.0);
        }
      for (std::size_t r = 0; r < s.n_valid; ++r) {
        CHECK(s.at(r, distance_m) >= 0.0);
        CHECK(s.at(r, speed_mps) >= 0.0);
      }
    }
    CHECK(sum == t.points.size());
  }
}

TEST_CASE("segment CSV and binary round trip") {
  Rng rng(9);
  std::vector<Segment> segs;
  for (int i = 0; i < 6; ++i) {
    auto s = build_segments(random_trip(rng, 40 + uniform_index(rng, 80)));
    segs.insert(segs.end(), s.begin(), s.end());
  }
  segs[1].label.reset();
  std::stringstream csv, bin;
  write_segments_csv(csv, segs);
  write_segments_binary(bin, segs);
  const auto a = read_segments_csv(csv);
  const auto b = read_segments_binary(bin);
  REQUIRE(a.size() == segs.size());
  REQUIRE(b.size() == segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(a[i].values == segs[i].values);
    CHECK(b[i].values == segs[i].values);
    CHECK(a[i].label == segs[i].label);
    CHECK(b[i].label == segs[i].label);
    CHECK(a[i].n_valid == segs[i].n_valid);
    CHECK(b[i].n_valid == segs[i].n_valid);
  }
}

TEST_CASE("SEG1 byte layout") {
  Segment s;
  s.length = 2;
  s.values = {1, 2, 3, 4, 5, 0, 0, 0, 0, 0};
  s.n_valid = 1;
  s.label = Mode::transit;
  std::stringstream os;
  write_segments_binary(os, {s});
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 4 + 1 + 4 + 4 + 8 + (4 + 4 + 10 * 8));
  CHECK(bytes.substr(0, 4) == "SEG1");
  CHECK(bytes[4] == 1);
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(k)]);
    return v;
  };
  CHECK(u32(5) == 2);   // length
  CHECK(u32(9) == 5);   // channels
  CHECK(u32(13) == 1);  // count, low word
  CHECK(u32(21) == 2);  // label index
  CHECK(u32(25) == 1);  // n_valid
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 29, 8);
  CHECK(first == 1.0);
}

TEST_CASE("corrupt segment files are data errors") {
  std::stringstream bad("SEG1\x02");
  CHECK_THROWS_AS(read_segments_binary(bad), Error);
  std::stringstream csv("label,n_valid,v0\nwalk,1\n");
  try {
    read_segments_csv(csv);
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}

TEST_CASE("save and load pick the format by extension") {
  const auto dir = oracle::temp_dir("channels");
  const auto segs = build_segments(line_trip(100));
  save_segments((dir / "a.csv").string(), segs);
  save_segments((dir / "a.seg").string(), segs);
  CHECK(oracle::read_file(dir / "a.csv").rfind("label,n_valid", 0) == 0);
  CHECK(oracle::read_file(dir / "a.seg").rfind("SEG1", 0) == 0);
  CHECK(load_segments((dir / "a.csv").string())[1].values == segs[1].values);
  CHECK(load_segments((dir / "a.seg").string())[1].values == segs[1].values);
}
