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

#include "trajmode/stacking.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajmode/eval.hpp"
#include "trajmode/log.hpp"
#include "trajmode/parallel.hpp"

namespace trajmode {

std::vector<std::vector<std::size_t>> make_folds(const std::vector<Segment>& segs, std::span<const std::size_t> indices,
                                                 std::size_t k, std::uint64_t seed) {
  return eval::stratified_kfold(segment_labels(segs, indices), k, seed);
}

OutOfFold out_of_fold_probabilities(const std::vector<NetworkCatalogEntry>& library, const std::vector<Segment>& segs,
                                    std::span<const std::size_t> indices,
                                    const std::vector<std::vector<std::size_t>>& folds, const StackingOptions& options) {
  require(!library.empty(), "stacking needs a non-empty library");
  const std::size_t n_learners = library.size();
  const std::size_t k = folds.size();
  std::vector<ProbMatrix> probs(n_learners);
  for (auto& p : probs) p.rows.assign(indices.size(), {});
  std::vector<char> failed(n_learners, 0);

  parallel_for(n_learners * k, options.jobs, [&](std::size_t task) {
    const std::size_t li = task / k;
    const std::size_t fi = task % k;
    std::vector<std::size_t> train_idx, held_idx;
    for (std::size_t f = 0; f < k; ++f)
      for (auto pos : folds[f]) (f == fi ? held_idx : train_idx).push_back(indices[pos]);
    try {
      const auto model = fit_learner(library[li], segs, train_idx, options.learner, fi + 1);
      const auto pm = predict_learner(model, segs, held_idx);
      for (std::size_t j = 0; j < folds[fi].size(); ++j) probs[li].rows[folds[fi][j]] = pm.rows[j];
      log_info("  oof " + library[li].name + " fold " + std::to_string(fi + 1) + "/" + std::to_string(k) + " done");
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::diverged) throw;
      failed[li] = 1;
      log_warn("learner " + library[li].name + " failed on fold " + std::to_string(fi + 1) + ": " + e.what());
    }
  });

  OutOfFold out;
  out.folds = folds;
  for (std::size_t li = 0; li < n_learners; ++li) {
    if (failed[li]) continue;
    probs[li].learner_id = library[li].name;
    out.probs.push_back(std::move(probs[li]));
    out.learners.push_back(li);
  }
  if (out.learners.empty()) fail(ErrorKind::diverged, "every base learner failed to train");
  return out;
}

forest::ForestModel fit_meta_forest(const OutOfFold& oof, std::span<const int> labels, const StackingOptions& options) {
  auto cfg = options.meta;
  cfg.jobs = options.jobs;
  return forest::train_forest(stack_features(oof.probs), labels, cfg);
}

std::vector<ProbMatrix> base_probabilities(const std::vector<nn::ModelFile>& base, const std::vector<Segment>& segs,
                                           std::span<const std::size_t> indices) {
  std::vector<ProbMatrix> out;
  out.reserve(base.size());
  for (const auto& m : base) out.push_back(predict_learner(m, segs, indices));
  return out;
}

StackedModel fit_meta_learner(const std::vector<NetworkCatalogEntry>& library, const std::vector<Segment>& segs,
                              std::span<const std::size_t> indices, const StackingOptions& options) {
  StackedModel model;
  model.fold_seed = options.fold_seed;
  model.segment_length = segs[indices.front()].length;
  const auto folds = make_folds(segs, indices, options.k_folds, options.fold_seed);
  const auto oof = out_of_fold_probabilities(library, segs, indices, folds, options);
  model.meta = fit_meta_forest(oof, segment_labels(segs, indices), options);
  model.folds = folds;
  for (auto li : oof.learners) model.library.push_back(library[li]);
  model.base.resize(model.library.size());
  parallel_for(model.library.size(), options.jobs, [&](std::size_t i) {
    model.base[i] = fit_learner(model.library[i], segs, indices, options.learner, 0);
  });
  return model;
}

VoteResult predict_stack(const StackedModel& model, const std::vector<Segment>& segs,
                         std::span<const std::size_t> indices) {
  for (auto i : indices)
    if (segs[i].length != model.segment_length)
      fail(ErrorKind::data, "segment length " + std::to_string(segs[i].length) + " differs from training length " +
                                std::to_string(model.segment_length));
  const auto probs = base_probabilities(model.base, segs, indices);
  const auto pred = forest::predict_forest(model.meta, stack_features(probs));
  VoteResult r;
  r.labels = pred.labels;
  r.combined.learner_id = "stack";
  r.combined.rows = pred.probs;
  return r;
}

void save_stack(const std::string& dir, const StackedModel& model) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "library.tsv");
    write_manifest(os, model.library);
  }
  for (std::size_t i = 0; i < model.base.size(); ++i)
    nn::save_model((fs::path(dir) / ("base_" + std::to_string(i) + ".mnet")).string(), model.base[i]);
  forest::save_forest((fs::path(dir) / "meta.frst").string(), model.meta);
  {
    std::ofstream os(fs::path(dir) / "folds.txt");
    for (const auto& f : model.folds) {
      for (std::size_t j = 0; j < f.size(); ++j) os << (j ? " " : "") << f[j];
      os << '\n';
    }
  }
  std::ofstream os(fs::path(dir) / "index.txt");
  os << "format trajmode-stack 1\n";
  os << "segment_length " << model.segment_length << '\n';
  os << "fold_seed " << model.fold_seed << '\n';
  os << "k_folds " << model.folds.size() << '\n';
  os << "learners " << model.base.size() << '\n';
  os << "manifest library.tsv\nmeta meta.frst\nfolds folds.txt\n";
  for (std::size_t i = 0; i < model.base.size(); ++i) os << "base base_" << i << ".mnet\n";
  if (!os) fail(ErrorKind::data, "cannot write stack index in " + dir);
}

StackedModel load_stack(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream idx(fs::path(dir) / "index.txt");
  if (!idx) fail(ErrorKind::data, "missing stacked model index " + (fs::path(dir) / "index.txt").string());
  StackedModel model;
  std::string key, value, line;
  std::vector<std::string> base_files;
  while (std::getline(idx, line)) {
    std::stringstream ss(line);
    ss >> key >> value;
    if (key == "segment_length") model.segment_length = std::stoul(value);
    else if (key == "fold_seed") model.fold_seed = std::stoull(value);
    else if (key == "base") base_files.push_back(value);
  }
  std::ifstream man(fs::path(dir) / "library.tsv");
  if (!man) fail(ErrorKind::data, "missing library manifest in " + dir);
  model.library = read_manifest(man);
  for (const auto& f : base_files) model.base.push_back(nn::load_model((fs::path(dir) / f).string()));
  if (model.base.size() != model.library.size()) fail(ErrorKind::data, "stack index and manifest disagree");
  model.meta = forest::load_forest((fs::path(dir) / "meta.frst").string());
  std::ifstream folds(fs::path(dir) / "folds.txt");
  while (std::getline(folds, line)) {
    std::stringstream ss(line);
    std::vector<std::size_t> f;
    std::size_t v;
    while (ss >> v) f.push_back(v);
    model.folds.push_back(std::move(f));
  }
  return model;
}

}  // namespace trajmode
