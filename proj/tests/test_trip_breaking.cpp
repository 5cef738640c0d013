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

#include <numeric>

#include "doctest.h"
#include "trajmode/rng.hpp"
#include "trajmode/trip_breaking.hpp"
#include "trip_fixtures.hpp"

using namespace trajmode;
using namespace trip_fixture;

TEST_CASE("split on three-minute gaps") {
  CHECK(split_on_gaps(stream_with_gaps({60, 200, 60})).size() == 2);
  CHECK(split_on_gaps(stream_with_gaps({100, 100, 100})).size() == 1);
  const auto singles = split_on_gaps(stream_with_gaps({300, 300, 300, 300}));
  CHECK(singles.size() == 5);
  for (const auto& r : singles) CHECK(r.size() == 1);
  CHECK(split_on_gaps(stream_with_gaps({180})).size() == 1);  // exactly the threshold stays joined
  CHECK(split_on_gaps({}).empty());
}

TEST_CASE("metro stitch joins runs bracketed by stations") {
  const auto a = arriving_at(kStationA, 150.0, 10000);
  const auto b = leaving_from(kStationB, 90.0, 10000 + 900);
  const auto merged = stitch_metro({a, b}, infra());
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].size() == a.size() + b.size());
}

TEST_CASE("metro stitch refuses gaps beyond the maximum travel time") {
  const auto a = arriving_at(kStationA, 150.0, 10000);
  const auto b = leaving_from(kStationB, 90.0, 10000 + 3600);
  CHECK(stitch_metro({a, b}, infra()).size() == 2);
  auto t = infra();
  t.max_metro_travel_s = 900.0;  // strict inequality
  CHECK(stitch_metro({a, leaving_from(kStationB, 90.0, 10000 + 900)}, t).size() == 2);
}

TEST_CASE("metro stitch needs both ends within 300 m") {
  const auto a = arriving_at(kStationA, 500.0, 10000);
  const auto b = leaving_from(kStationB, 500.0, 10000 + 900, 45.0);
  CHECK(stitch_metro({a, b}, infra()).size() == 2);
  CHECK(stitch_metro({arriving_at(kStationA, 150.0, 10000), b}, infra()).size() == 2);
  CHECK(stitch_metro({arriving_at(kStationA, 299.0, 10000), leaving_from(kStationB, 299.0, 10900)}, infra()).size() ==
        1);
}

TEST_CASE("metro stitch velocity guard") {
  auto t = infra();
  t.metro_stations.push_back({"far", 46.5, -73.6});  // about 111 km away
  const auto a = arriving_at(kStationA, 100.0, 10000);
  const auto b = leaving_from(GpsPoint{0, 46.5, -73.6}, 100.0, 10000 + 900);
  CHECK(stitch_metro({a, b}, t).size() == 2);
  TripBreakConfig loose;
  loose.max_bridge_speed_mps = 200.0;
  CHECK(stitch_metro({a, b}, t, loose).size() == 1);
}

TEST_CASE("intersection stitch allows ten minutes at one crossing") {
  const auto a = arriving_at(kCrossing, 40.0, 20000);
  const auto b = leaving_from(kCrossing, 60.0, 20000 + 480);
  const auto merged = stitch_intersection({a, b}, infra());
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].size() == a.size() + b.size());
  CHECK(stitch_intersection({a, leaving_from(kCrossing, 60.0, 20000 + 600)}, infra()).size() == 1);
  CHECK(stitch_intersection({a, leaving_from(kCrossing, 60.0, 20000 + 700)}, infra()).size() == 2);
}

TEST_CASE("intersection stitch needs the same crossing") {
  const auto a = arriving_at(kCrossing, 40.0, 20000);
  const auto b = leaving_from(kOtherCrossing, 40.0, 20000 + 480);
  CHECK(stitch_intersection({a, b}, infra()).size() == 2);
  CHECK(stitch_intersection({a, leaving_from(kCrossing, 120.0, 20480)}, infra()).size() == 2);
}

TEST_CASE("stitching chains left to right") {
  const auto a = arriving_at(kCrossing, 20.0, 20000);
  const auto b = leaving_from(kCrossing, 20.0, 20400, 0.0, 2);  // two points, ends near the crossing
  const auto c = leaving_from(kCrossing, 30.0, 20900);
  const auto merged = stitch_intersection({a, b, c}, infra());
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].size() == a.size() + b.size() + c.size());
}

TEST_CASE("break_trips scenarios") {
  const GpsPoint far{0, 10.0, 10.0};
  SUBCASE("continuous half hour") {
    const auto r = walk(far, 0, 181, 10, 30.0, 12.0);
    const auto trips = break_trips(r, infra());
    REQUIRE(trips.size() == 1);
    CHECK(trips[0].points.size() == 181);
  }
  SUBCASE("four-minute gap away from infrastructure") {
    auto r = walk(far, 0, 30, 10, 30.0, 12.0);
    const auto tail = walk(destination_point(r.back(), 30.0, 60.0), r.back().timestamp + 240, 30, 10, 30.0, 12.0);
    r.insert(r.end(), tail.begin(), tail.end());
    CHECK(break_trips(r, infra()).size() == 2);
  }
  SUBCASE("underground ten minutes between stations") {
    auto r = arriving_at(kStationA, 120.0, 5000, 20);
    const auto b = leaving_from(kStationB, 80.0, 5600, 90.0, 20);
    r.insert(r.end(), b.begin(), b.end());
    const auto trips = break_trips(r, infra(), {}, "u1");
    REQUIRE(trips.size() == 1);
    CHECK(trips[0].points.size() == 40);
    CHECK(trips[0].user_id == "u1");
  }
  SUBCASE("singleton runs are dropped") {
    const auto pts = stream_with_gaps({300, 10, 300});
    const auto trips = break_trips(pts, {});
    REQUIRE(trips.size() == 1);
    CHECK(trips[0].points.size() == 2);
  }
}

TEST_CASE("cascade: a metro stitch enables an intersection stitch") {
  // A crossing right next to station B.
  auto t = infra();
  t.bus_intersections.push_back({"Z", kStationB.lat, kStationB.lon});
  const auto a = arriving_at(kStationA, 100.0, 1000);
  const auto b = leaving_from(kStationB, 30.0, 1900, 90.0, 3);
  const auto c = leaving_from(kStationB, 50.0, b.back().timestamp + 500, 180.0);
  const auto trips = break_trips(concat({a, b, c}), t);
  REQUIRE(trips.size() == 1);
  CHECK(trips[0].points.size() == a.size() + b.size() + c.size());
}

TEST_CASE("randomized streams: conservation, idempotence and gap monotonicity") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GpsPoint> pts;
    GpsPoint p{0, uniform(rng, -50, 50), uniform(rng, -170, 170)};
    const auto n = 2 + uniform_index(rng, 200);
    for (std::uint64_t i = 0; i < n; ++i) {
      const bool gap = uniform01(rng) < 0.08;
      p.timestamp += gap ? 60 + static_cast<std::int64_t>(uniform_index(rng, 900)) : 1 + static_cast<std::int64_t>(uniform_index(rng, 30));
      p = GpsPoint{p.timestamp, destination_point(p, uniform(rng, 0, 360), uniform(rng, 0, 40)).lat,
                   destination_point(p, uniform(rng, 0, 360), uniform(rng, 0, 40)).lon};
      pts.push_back(p);
    }
    const auto runs = split_on_gaps(pts);
    CHECK(total(runs) == pts.size());
    std::size_t singles = 0;
    for (const auto& r : runs) singles += r.size() == 1;
    const auto trips = break_trips(pts, infra());
    std::size_t kept = 0;
    for (const auto& t : trips) kept += t.points.size();
    CHECK(kept + singles == pts.size());

    std::vector<GpsPoint> again;
    for (const auto& t : trips) again.insert(again.end(), t.points.begin(), t.points.end());
    const auto trips2 = break_trips(again, infra());
    REQUIRE(trips2.size() == trips.size());
    for (std::size_t i = 0; i < trips.size(); ++i) CHECK(trips2[i].points == trips[i].points);

    // Run counts before the singleton drop are monotone in gap_s.
    std::size_t prev = SIZE_MAX;
    for (std::int64_t g : {60, 120, 180, 300, 600, 1200}) {
      const auto count = split_on_gaps(pts, g).size();
      CHECK(count <= prev);
      prev = count;
    }
  }
}

TEST_CASE("a wider gap can turn dropped singletons into a trip") {
  // a --100 s-- b --1000 s-- c --10 s-- d
  const auto pts = stream_with_gaps({100, 1000, 10});
  TripBreakConfig tight, wide;
  tight.gap_s = 60;
  wide.gap_s = 120;
  CHECK(break_trips(pts, {}, tight).size() == 1);
  CHECK(break_trips(pts, {}, wide).size() == 2);
  CHECK(split_on_gaps(pts, 60).size() >= split_on_gaps(pts, 120).size());
}
