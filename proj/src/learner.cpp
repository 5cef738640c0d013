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

#include "trajmode/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "trajmode/eval.hpp"
#include "trajmode/rng.hpp"

namespace trajmode {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

nn::Normalizer fit_normalizer(const std::vector<Segment>& segs, std::span<const std::size_t> indices) {
  nn::Normalizer norm;
  norm.mean.assign(kNumChannels, 0.0);
  norm.stddev.assign(kNumChannels, 1.0);
  std::vector<double> sum(kNumChannels, 0.0), sum_sq(kNumChannels, 0.0);
  double count = 0.0;
  for (auto i : indices) {
    const auto& s = segs[i];
    for (std::size_t r = 0; r < s.n_valid; ++r)
      for (std::size_t c = 0; c < kNumChannels; ++c) sum[c] += s.at(r, c);
    count += static_cast<double>(s.n_valid);
  }
  if (count == 0.0) return norm;
  for (std::size_t c = 0; c < kNumChannels; ++c) norm.mean[c] = sum[c] / count;
  // Second pass for numerically stable variance.
  for (auto i : indices) {
    const auto& s = segs[i];
    for (std::size_t r = 0; r < s.n_valid; ++r)
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        const double d = s.at(r, c) - norm.mean[c];
        sum_sq[c] += d * d;
      }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double sd = std::sqrt(sum_sq[c] / count);
    norm.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

nn::Tensor2D to_tensor(const Segment& seg, const nn::Normalizer& norm) {
  require(norm.mean.size() == kNumChannels && norm.stddev.size() == kNumChannels, "normalizer has wrong width");
  nn::Tensor2D t(seg.length, kNumChannels);
  for (std::size_t r = 0; r < seg.length; ++r)
    for (std::size_t c = 0; c < kNumChannels; ++c) t.at(r, c) = (seg.at(r, c) - norm.mean[c]) / norm.stddev[c];
  return t;
}

std::vector<int> segment_labels(const std::vector<Segment>& segs, std::span<const std::size_t> indices) {
  std::vector<int> y;
  y.reserve(indices.size());
  for (auto i : indices) {
    if (!segs[i].label) fail(ErrorKind::data, "segment " + std::to_string(i) + " has no mode label");
    y.push_back(mode_index(*segs[i].label));
  }
  return y;
}

nn::ModelFile fit_learner(const NetworkCatalogEntry& entry, const std::vector<Segment>& segs,
                          std::span<const std::size_t> indices, const LearnerOptions& options, std::uint64_t salt,
                          nn::TrainHistory* history) {
  require(!indices.empty(), "fit_learner: no training segments");
  const std::size_t length = segs[indices.front()].length;
  for (auto i : indices) require(segs[i].length == length, "fit_learner: mixed segment lengths");
  const auto y = segment_labels(segs, indices);
  const std::uint64_t run_seed = derive_seed(entry.seed, salt);

  std::vector<std::size_t> fit_idx(indices.begin(), indices.end());
  std::vector<std::size_t> valid_idx;
  if (options.valid_fraction > 0.0) {
    std::array<std::size_t, kNumModes> per{};
    for (int v : y) ++per[static_cast<std::size_t>(v)];
    const bool splittable = std::all_of(per.begin(), per.end(), [](std::size_t n) { return n != 1; });
    if (splittable) {
      const auto split = eval::stratified_split(y, options.valid_fraction, derive_seed(run_seed, 1));
      fit_idx.clear();
      for (auto p : split.train) fit_idx.push_back(indices[p]);
      for (auto p : split.test) valid_idx.push_back(indices[p]);
    }
  }

  nn::ModelFile model;
  model.name = entry.name;
  model.normalizer = fit_normalizer(segs, fit_idx);
  model.train_seed = derive_seed(run_seed, 2);
  model.network = nn::Network(scale_widths(entry.spec, options.width_divisor), {length, kNumChannels},
                              derive_seed(run_seed, 3));

  auto to_set = [&](const std::vector<std::size_t>& idx) {
    nn::LabeledSet set;
    set.inputs.reserve(idx.size());
    for (auto i : idx) {
      set.inputs.push_back(to_tensor(segs[i], model.normalizer));
      set.labels.push_back(mode_index(*segs[i].label));
    }
    return set;
  };
  const auto train_set = to_set(fit_idx);
  const auto valid_set = to_set(valid_idx);

  nn::TrainConfig cfg;
  cfg.batch_size = options.batch_size;
  cfg.epochs = options.epochs.value_or(entry.epochs);
  cfg.patience = options.patience;
  cfg.learning_rate = options.learning_rate;
  cfg.seed = model.train_seed;
  auto h = nn::train(model.network, train_set, valid_set, cfg);
  if (history) *history = std::move(h);
  return model;
}

ProbMatrix predict_learner(const nn::ModelFile& model, const std::vector<Segment>& segs,
                           std::span<const std::size_t> indices) {
  ProbMatrix out;
  out.learner_id = model.name;
  out.rows.reserve(indices.size());
  const auto expect = model.network.input_shape().length;
  for (auto i : indices) {
    if (segs[i].length != expect)
      fail(ErrorKind::data, "segment length " + std::to_string(segs[i].length) + " does not match model length " +
                                std::to_string(expect));
    out.rows.push_back(model.network.predict_proba(to_tensor(segs[i], model.normalizer)));
  }
  return out;
}

}  // namespace trajmode
