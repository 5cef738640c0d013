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
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "trajmode/stacking.hpp"

using namespace trajmode;

namespace {

std::vector<NetworkCatalogEntry> tiny_library() {
  using nn::LayerSpec;
  const std::vector<LayerSpec> a{LayerSpec::conv(4, 4), LayerSpec::maxpool(4), LayerSpec::dropout(0.5),
                                 LayerSpec::dense(), LayerSpec::softmax()};
  const std::vector<LayerSpec> b{LayerSpec::conv(2, 4), LayerSpec::maxpool(2), LayerSpec::conv(2, 8),
                                 LayerSpec::maxpool(2), LayerSpec::dropout(0.5), LayerSpec::dense(),
                                 LayerSpec::softmax()};
  return {{"a", a, 3, 101}, {"b", b, 3, 202}};
}

StackingOptions tiny_options() {
  StackingOptions opt;
  opt.k_folds = 3;
  opt.fold_seed = 77;
  opt.learner.learning_rate = 1e-3;
  opt.meta.n_trees = 50;
  opt.meta.seed = 5;
  return opt;
}

}  // namespace

TEST_CASE("folds are stratified and cover the index list") {
  const auto segs = fixture::synthetic_segments(15, 3, 40, 90);
  const auto idx = all_indices(segs.size());
  const auto folds = make_folds(segs, idx, 3, 9);
  REQUIRE(folds.size() == 3);
  std::vector<std::size_t> seen;
  for (const auto& f : folds) seen.insert(seen.end(), f.begin(), f.end());
  std::sort(seen.begin(), seen.end());
  CHECK(seen == idx);
  CHECK(make_folds(segs, idx, 3, 9) == folds);
}

TEST_CASE("held-out meta-features do not depend on held-out labels") {
  auto segs = fixture::synthetic_segments(15, 4, 40, 90);
  const auto idx = all_indices(segs.size());
  const auto opt = tiny_options();
  const auto folds = make_folds(segs, idx, opt.k_folds, opt.fold_seed);
  const auto lib = tiny_library();
  const auto before = out_of_fold_probabilities(lib, segs, idx, folds, opt);

  // Relabel every segment of fold 0; the folds themselves stay fixed.
  for (auto pos : folds[0]) segs[idx[pos]].label = static_cast<Mode>((static_cast<int>(*segs[idx[pos]].label) + 1) % 4);
  const auto after = out_of_fold_probabilities(lib, segs, idx, folds, opt);
  REQUIRE(before.learners == after.learners);
  bool other_changed = false;
  for (std::size_t l = 0; l < before.probs.size(); ++l) {
    for (auto pos : folds[0]) CHECK(before.probs[l].rows[pos] == after.probs[l].rows[pos]);
    for (auto pos : folds[1]) other_changed |= before.probs[l].rows[pos] != after.probs[l].rows[pos];
  }
  // The other folds trained on the relabelled rows, so they must move.
  CHECK(other_changed);
}

TEST_CASE("stacked model fits, predicts, and survives a save/load round trip") {
  const auto segs = fixture::synthetic_segments(12, 8, 40, 90);
  const auto idx = all_indices(segs.size());
  const auto opt = tiny_options();
  const auto lib = tiny_library();
  const auto model = fit_meta_learner(lib, segs, idx, opt);
  CHECK(model.library.size() == 2);
  CHECK(model.base.size() == 2);
  CHECK(model.segment_length == kDefaultSegmentLength);
  const auto pred = predict_stack(model, segs, idx);
  REQUIRE(pred.labels.size() == segs.size());
  for (const auto& r : pred.combined.rows) {
    CHECK(std::accumulate(r.begin(), r.end(), 0.0) == doctest::Approx(1.0));
    for (double v : r) CHECK(std::isfinite(v));
  }

  const auto dir = oracle::temp_dir("stack");
  save_stack(dir.string(), model);
  for (const char* f : {"index.txt", "library.tsv", "base_0.mnet", "base_1.mnet", "meta.frst", "folds.txt"})
    CHECK(std::filesystem::exists(dir / f));
  const auto back = load_stack(dir.string());
  CHECK(back.folds == model.folds);
  CHECK(back.fold_seed == model.fold_seed);
  const auto again = predict_stack(back, segs, idx);
  CHECK(again.labels == pred.labels);
  CHECK(again.combined.rows == pred.combined.rows);

  // Row independence: reversed order gives reversed predictions.
  std::vector<std::size_t> rev(idx.rbegin(), idx.rend());
  auto rpred = predict_stack(model, segs, rev).labels;
  std::reverse(rpred.begin(), rpred.end());
  CHECK(rpred == pred.labels);

  // A fully padded segment still gets a probability row.
  std::vector<Segment> blank(1);
  blank[0].values.assign(kDefaultSegmentLength * kNumChannels, 0.0);
  const auto bp = predict_stack(model, blank, all_indices(1));
  CHECK(std::accumulate(bp.combined.rows[0].begin(), bp.combined.rows[0].end(), 0.0) == doctest::Approx(1.0));

  std::vector<Segment> longer(1);
  longer[0].length = 120;
  longer[0].values.assign(120 * kNumChannels, 0.0);
  CHECK_THROWS_AS(predict_stack(model, longer, all_indices(1)), Error);
  CHECK_THROWS_AS(load_stack((dir / "missing").string()), Error);
}

TEST_CASE("stacking is reproducible") {
  const auto segs = fixture::synthetic_segments(8, 2, 40, 80);
  const auto idx = all_indices(segs.size());
  const auto a = fit_meta_learner(tiny_library(), segs, idx, tiny_options());
  const auto b = fit_meta_learner(tiny_library(), segs, idx, tiny_options());
  for (std::size_t i = 0; i < a.base.size(); ++i)
    CHECK(std::equal(a.base[i].network.params().begin(), a.base[i].network.params().end(),
                     b.base[i].network.params().begin()));
  std::stringstream fa, fb;
  forest::write_forest(fa, a.meta);
  forest::write_forest(fb, b.meta);
  CHECK(fa.str() == fb.str());
  CHECK_THROWS_AS(fit_meta_learner({}, segs, idx, tiny_options()), Error);
}
