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

#include "trajmode/forest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "trajmode/binio.hpp"
#include "trajmode/parallel.hpp"
#include "trajmode/rng.hpp"

namespace trajmode::forest {

double gini_impurity(std::span<const double> class_counts) {
  const double total = std::accumulate(class_counts.begin(), class_counts.end(), 0.0);
  require(total > 0.0, "gini_impurity needs a non-empty node");
  double sum_sq = 0.0;
  for (double c : class_counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

namespace {

constexpr double kGainEps = 1e-12;

ClassCounts count_classes(std::span<const int> y, std::span<const std::size_t> samples) {
  ClassCounts c{};
  for (auto s : samples) c[static_cast<std::size_t>(y[s])] += 1.0;
  return c;
}

// Gini from counts with a known total, avoiding the accumulate.
double gini_of(const ClassCounts& c, double total) {
  double sum_sq = 0.0;
  for (double v : c) sum_sq += v * v;
  return 1.0 - sum_sq / (total * total);
}

}  // namespace

std::optional<Split> best_split(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> samples,
                                std::span<const std::size_t> candidate_features) {
  const double n = static_cast<double>(samples.size());
  if (samples.size() < 2) return std::nullopt;
  const ClassCounts parent = count_classes(y, samples);
  const double parent_gini = gini_of(parent, n);
  if (parent_gini <= 0.0) return std::nullopt;

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  std::optional<Split> best;
  std::vector<std::pair<double, int>> column(samples.size());
  for (auto f : features) {
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = {x.at(samples[i], f), y[samples[i]]};
    std::sort(column.begin(), column.end());
    ClassCounts left{};
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      left[static_cast<std::size_t>(column[i].second)] += 1.0;
      if (column[i].first == column[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      ClassCounts right{};
      for (int c = 0; c < kNumModes; ++c) right[c] = parent[c] - left[c];
      const double gain = parent_gini - (nl / n) * gini_of(left, nl) - (nr / n) * gini_of(right, nr);
      if (gain > kGainEps && (!best || gain > best->gain + kGainEps)) {
        const double mid = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
        best = Split{f, mid, gain};
      }
    }
  }
  return best;
}

const ClassCounts& Tree::leaf_for(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf())
    i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  return nodes[i].distribution;
}

namespace {

struct Grower {
  const FeatureMatrix& x;
  std::span<const int> y;
  std::size_t max_features;
  std::size_t min_node_size;
  Rng rng;
  Tree tree;
  std::vector<std::size_t> feature_pool;

  std::int32_t grow(std::vector<std::size_t> samples) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const ClassCounts counts = count_classes(y, samples);
    const double n = static_cast<double>(samples.size());

    std::optional<Split> split;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
    if (!pure && samples.size() >= 2 && samples.size() >= min_node_size) {
      // Partial Fisher-Yates: the first k entries become the candidate set.
      const std::size_t k = std::min(max_features, feature_pool.size());
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + uniform_index(rng, feature_pool.size() - i);
        std::swap(feature_pool[i], feature_pool[j]);
      }
      split = best_split(x, y, samples, std::span<const std::size_t>(feature_pool.data(), k));
    }
    if (!split) {
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      for (int c = 0; c < kNumModes; ++c) node.distribution[c] = counts[c] / n;
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto s : samples) (x.at(s, split->feature) <= split->threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    const auto l = grow(std::move(left));
    const auto r = grow(std::move(right));
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.left = l;
    node.right = r;
    node.feature = static_cast<std::uint32_t>(split->feature);
    node.threshold = split->threshold;
    return id;
  }
};

void validate_labels(std::span<const int> y) {
  for (int v : y)
    if (v < 0 || v >= kNumModes) fail(ErrorKind::data, "label out of range: " + std::to_string(v));
}

}  // namespace

Tree grow_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> samples,
               std::size_t max_features, std::size_t min_node_size, std::uint64_t seed) {
  require(!samples.empty(), "cannot grow a tree on zero samples");
  Grower g{x, y, std::max<std::size_t>(1, max_features), min_node_size, Rng(seed), {}, {}};
  g.feature_pool.resize(x.cols);
  std::iota(g.feature_pool.begin(), g.feature_pool.end(), 0);
  g.grow(std::vector<std::size_t>(samples.begin(), samples.end()));
  return std::move(g.tree);
}

ForestModel train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestConfig& config) {
  require(x.rows == y.size() && x.rows > 0 && x.cols > 0, "train_forest: feature/label shape mismatch");
  require(config.n_trees >= 1, "forest needs at least one tree");
  require(config.max_features >= 1, "max_features must be >= 1");
  validate_labels(y);
  if (x.rows < config.min_node_size)
    fail(ErrorKind::data, "train_forest: fewer samples than min_node_size");
  std::vector<bool> present(kNumModes, false);
  for (int v : y) present[static_cast<std::size_t>(v)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) fail(ErrorKind::data, "train_forest needs at least 2 classes");

  ForestModel model;
  model.n_features = x.cols;
  model.trees.resize(config.n_trees);
  parallel_for(config.n_trees, config.jobs, [&](std::size_t t) {
    const auto tree_seed = derive_seed(config.seed, t);
    Rng rng(derive_seed(tree_seed, 0xb007));
    std::vector<std::size_t> samples(x.rows);
    if (config.bootstrap)
      for (auto& s : samples) s = uniform_index(rng, x.rows);
    else
      std::iota(samples.begin(), samples.end(), 0);
    model.trees[t] = grow_tree(x, y, samples, config.max_features, config.min_node_size, tree_seed);
  });
  return model;
}

ForestPrediction predict_forest(const ForestModel& model, const FeatureMatrix& x) {
  if (x.cols != model.n_features)
    fail(ErrorKind::data, "predict_forest: expected " + std::to_string(model.n_features) + " features, got " +
                              std::to_string(x.cols));
  require(!model.trees.empty(), "predict_forest: empty forest");
  ForestPrediction out;
  out.probs.resize(x.rows);
  out.labels.resize(x.rows);
  const double inv = 1.0 / static_cast<double>(model.trees.size());
  for (std::size_t r = 0; r < x.rows; ++r) {
    std::array<double, kNumModes> p{};
    for (const auto& t : model.trees) {
      const auto& d = t.leaf_for(x.row(r));
      for (int c = 0; c < kNumModes; ++c) p[c] += d[c];
    }
    for (auto& v : p) v *= inv;
    out.probs[r] = p;
    out.labels[r] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  return out;
}

namespace {

void write_node(std::ostream& os, const Tree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  binio::put_u8(os, n.is_leaf() ? 1 : 0);
  if (n.is_leaf()) {
    for (double v : n.distribution) binio::put_f64(os, v);
    return;
  }
  binio::put_u32(os, n.feature);
  binio::put_f64(os, n.threshold);
  write_node(os, t, static_cast<std::size_t>(n.left));
  write_node(os, t, static_cast<std::size_t>(n.right));
}

std::int32_t read_node(std::istream& is, Tree& t, std::size_t n_features, int depth) {
  if (depth > 10000) fail(ErrorKind::data, "FRST tree too deep");
  const auto id = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  if (binio::get_u8(is) == 1) {
    for (auto& v : t.nodes.back().distribution) v = binio::get_f64(is);
    return id;
  }
  const auto feature = binio::get_u32(is);
  if (feature >= n_features) fail(ErrorKind::data, "FRST split feature out of range");
  const auto threshold = binio::get_f64(is);
  const auto l = read_node(is, t, n_features, depth + 1);
  const auto r = read_node(is, t, n_features, depth + 1);
  auto& node = t.nodes[static_cast<std::size_t>(id)];
  node.feature = feature;
  node.threshold = threshold;
  node.left = l;
  node.right = r;
  return id;
}

}  // namespace

void write_forest(std::ostream& os, const ForestModel& model) {
  binio::put_magic(os, "FRST");
  binio::put_u8(os, 1);
  binio::put_u32(os, static_cast<std::uint32_t>(model.n_features));
  binio::put_u32(os, static_cast<std::uint32_t>(model.trees.size()));
  for (const auto& t : model.trees) {
    binio::put_u32(os, static_cast<std::uint32_t>(t.nodes.size()));
    write_node(os, t, 0);
  }
}

ForestModel read_forest(std::istream& is) {
  binio::expect_magic(is, "FRST");
  if (binio::get_u8(is) != 1) fail(ErrorKind::data, "unsupported FRST version");
  ForestModel m;
  m.n_features = binio::get_u32(is);
  m.trees.resize(binio::get_u32(is));
  for (auto& t : m.trees) {
    const auto n_nodes = binio::get_u32(is);
    t.nodes.reserve(n_nodes);
    read_node(is, t, m.n_features, 0);
    if (t.nodes.size() != n_nodes) fail(ErrorKind::data, "FRST node count mismatch");
  }
  return m;
}

void save_forest(const std::string& path, const ForestModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::data, "cannot write " + path);
  write_forest(os, model);
}

ForestModel load_forest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "missing forest file " + path);
  return read_forest(is);
}

}  // namespace trajmode::forest
