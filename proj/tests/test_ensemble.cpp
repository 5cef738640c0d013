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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "trajmode/ensemble.hpp"
#include "trajmode/rng.hpp"
#include "trajmode/stacking.hpp"

using namespace trajmode;

namespace {

ProbMatrix random_probs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ProbMatrix m;
  m.rows.resize(n);
  for (auto& r : m.rows) {
    double s = 0.0;
    for (auto& v : r) s += (v = 0.01 + uniform01(rng));
    for (auto& v : r) v /= s;
  }
  return m;
}

ProbMatrix one_hot(std::span<const int> y) {
  ProbMatrix m;
  m.rows.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) m.rows[i][static_cast<std::size_t>(y[i])] = 1.0;
  return m;
}

ProbMatrix uniform(std::size_t n) {
  ProbMatrix m;
  m.rows.assign(n, {0.25, 0.25, 0.25, 0.25});
  return m;
}

}  // namespace

TEST_CASE("combiners reject empty input") {
  CHECK_THROWS_AS(average_vote({}), Error);
  CHECK_THROWS_AS(majority_vote({}), Error);
  std::vector<ProbMatrix> mismatched{random_probs(3, 1), random_probs(4, 2)};
  CHECK_THROWS_AS(average_vote(mismatched), Error);
}

TEST_CASE("average vote arithmetic") {
  ProbMatrix a, b;
  a.rows = {{0.7, 0.1, 0.1, 0.1}};
  b.rows = {{0.3, 0.5, 0.1, 0.1}};
  const std::vector<ProbMatrix> mats{a, b};
  const auto r = average_vote(mats);
  CHECK(r.combined.rows[0][0] == doctest::Approx(0.5));
  CHECK(r.combined.rows[0][1] == doctest::Approx(0.3));
  CHECK(r.labels == std::vector<int>{0});

  std::vector<ProbMatrix> many;
  for (std::uint64_t s = 0; s < 7; ++s) many.push_back(random_probs(50, s));
  const auto avg = average_vote(many);
  for (std::size_t i = 0; i < 50; ++i) {
    for (int c = 0; c < kNumModes; ++c) {
      long double acc = 0.0L;
      for (const auto& m : many) acc += m.rows[i][c];
      CHECK(std::fabs(avg.combined.rows[i][c] - static_cast<double>(acc / 7.0L)) < 1e-12);
    }
    CHECK(std::accumulate(avg.combined.rows[i].begin(), avg.combined.rows[i].end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("majority vote counting and tie breaks") {
  using V = std::vector<int>;
  const std::vector<V> three{{3}, {3}, {0}};
  CHECK(majority_vote(three) == V{3});
  ProbMatrix p1, p2;
  p1.rows = {{0.40, 0.0, 0.0, 0.60}};
  p2.rows = {{0.70, 0.0, 0.0, 0.30}};
  // car mean 0.45 vs walk mean 0.55: walk wins the tie.
  const std::vector<V> two{{3}, {0}};
  const std::vector<ProbMatrix> probs{p1, p2};
  CHECK(majority_vote(two, probs) == V{0});
  p2.rows = {{0.50, 0.0, 0.0, 0.50}};
  const std::vector<ProbMatrix> probs2{p1, p2};
  // car mean 0.55 vs walk 0.45.
  CHECK(majority_vote(two, probs2) == V{3});
  CHECK(majority_vote(two) == V{0});
  const std::vector<V> four{{1}, {2}, {2}, {1}};
  CHECK(majority_vote(four) == V{1});
}

TEST_CASE("identical learners collapse under every combiner") {
  const auto p = random_probs(120, 3);
  const auto labels = argmax_labels(p);
  for (std::size_t k : {1U, 2U, 5U}) {
    const std::vector<ProbMatrix> mats(k, p);
    CHECK(average_vote(mats).labels == labels);
    CHECK(average_vote(mats).combined.rows == p.rows);
    CHECK(majority_vote(std::vector<std::vector<int>>(k, labels), mats) == labels);
    const std::vector<double> w(k, 1.0 / static_cast<double>(k));
    CHECK(weighted_vote(mats, w).labels == labels);

    // Meta forest on k copies of a learner whose labels are the targets.
    OutOfFold oof;
    oof.probs = mats;
    StackingOptions opt;
    opt.meta.n_trees = 100;
    opt.meta.seed = 4;
    const auto meta = fit_meta_forest(oof, labels, opt);
    CHECK(forest::predict_forest(meta, stack_features(mats)).labels == labels);
  }
}

TEST_CASE("uniform weights equal the average exactly") {
  std::vector<ProbMatrix> mats;
  for (std::uint64_t s = 10; s < 13; ++s) mats.push_back(random_probs(200, s));
  const std::vector<double> w(3, 1.0 / 3.0);
  const auto a = average_vote(mats), b = weighted_vote(mats, w);
  CHECK(a.labels == b.labels);
  CHECK(a.combined.rows == b.combined.rows);
}

TEST_CASE("weighted vote with one-hot and hand-computed weights") {
  std::vector<ProbMatrix> mats;
  for (std::uint64_t s = 20; s < 23; ++s) mats.push_back(random_probs(30, s));
  CHECK(weighted_vote(mats, std::vector<double>{0, 1, 0}).labels == argmax_labels(mats[1]));
  ProbMatrix a, b, c;
  a.rows = {{0.6, 0.2, 0.1, 0.1}};
  b.rows = {{0.1, 0.7, 0.1, 0.1}};
  c.rows = {{0.1, 0.1, 0.1, 0.7}};
  const std::vector<ProbMatrix> small{a, b, c};
  const auto r = weighted_vote(small, std::vector<double>{0.5, 0.2, 0.3});
  CHECK(r.combined.rows[0][0] == doctest::Approx(0.35));
  CHECK(r.combined.rows[0][1] == doctest::Approx(0.27));
  CHECK(r.combined.rows[0][3] == doctest::Approx(0.28));
  CHECK(r.labels == std::vector<int>{0});
}

TEST_CASE("optimal weights recover the perfect learner") {
  Rng rng(2);
  std::vector<int> y(400);
  for (auto& v : y) v = static_cast<int>(uniform_index(rng, kNumModes));
  const std::vector<ProbMatrix> pair{one_hot(y), uniform(y.size())};
  const auto fit = fit_optimal_weights(pair, y);
  REQUIRE(fit.weights.size() == 2);
  // The solver stops once the projected-gradient step is below 1e-8.
  CHECK(std::fabs(fit.weights[0] - 1.0) < 1e-6);
  CHECK(std::fabs(fit.weights[1]) < 1e-6);
  CHECK(fit.mse < 1e-10);
  CHECK(fit.uniform_mse > fit.mse);

  const std::vector<ProbMatrix> one{random_probs(y.size(), 9)};
  CHECK(fit_optimal_weights(one, y).weights == std::vector<double>{1.0});
  const std::vector<ProbMatrix> twins{one[0], one[0]};
  const auto tw = fit_optimal_weights(twins, y);
  CHECK(tw.weights[0] == doctest::Approx(0.5));
  CHECK(tw.weights[1] == doctest::Approx(0.5));
}

TEST_CASE("optimal weights never lose to uniform weights") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + uniform_index(rng, 100), k = 2 + uniform_index(rng, 5);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(uniform_index(rng, kNumModes));
    std::vector<ProbMatrix> mats;
    for (std::size_t j = 0; j < k; ++j) mats.push_back(random_probs(n, rng()));
    const auto fit = fit_optimal_weights(mats, y);
    CHECK(fit.mse <= fit.uniform_mse + 1e-15);
    CHECK(std::accumulate(fit.weights.begin(), fit.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double w : fit.weights) CHECK(w >= 0.0);
    // Optimality on the simplex: no vertex mix nearby does better.
    for (std::size_t j = 0; j < k; ++j) {
      auto w = fit.weights;
      for (auto& v : w) v *= 0.99;
      w[j] += 0.01;
      CHECK(combination_mse(mats, y, w) >= fit.mse - 1e-12);
    }
    const auto free_fit = fit_optimal_weights(mats, y, WeightFitOptions{false});
    CHECK(free_fit.mse <= fit.mse + 1e-12);
  }
}

TEST_CASE("simplex projection") {
  const auto inside = project_to_simplex(std::vector<double>{0.2, 0.3, 0.5});
  CHECK(inside[0] == doctest::Approx(0.2));
  CHECK(inside[2] == doctest::Approx(0.5));
  CHECK(project_to_simplex(std::vector<double>{5.0, 0.0}) == std::vector<double>{1.0, 0.0});
  const auto p = project_to_simplex(std::vector<double>{0.4, 0.4, -1.0});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
}

TEST_CASE("stack feature layout is learner-major") {
  ProbMatrix a, b;
  a.rows = {{0.1, 0.2, 0.3, 0.4}};
  b.rows = {{0.5, 0.6, 0.7, 0.8}};
  const std::vector<ProbMatrix> mats{a, b};
  const auto x = stack_features(mats);
  CHECK(x.cols == 8);
  CHECK(x.at(0, 0) == 0.1);
  CHECK(x.at(0, 3) == 0.4);
  CHECK(x.at(0, 4) == 0.5);
  CHECK(x.at(0, 7) == 0.8);
}
