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

#include "trajmode/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "trajmode/rng.hpp"

namespace trajmode::eval {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

namespace {

void check_label(int v) {
  if (v < 0 || v >= kNumModes) fail(ErrorKind::data, "unknown label " + std::to_string(v));
}

std::array<std::vector<std::size_t>, kNumModes> indices_by_class(std::span<const int> labels) {
  std::array<std::vector<std::size_t>, kNumModes> by;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_label(labels[i]);
    by[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return by;
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> actual, std::span<const int> predicted) {
  require(actual.size() == predicted.size(), "confusion_matrix: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    check_label(actual[i]);
    check_label(predicted[i]);
    ++cm.counts[actual[i]][predicted[i]];
  }
  return cm;
}

Metrics precision_recall_f1(const ConfusionMatrix& cm) {
  Metrics m;
  std::uint64_t trace = 0;
  for (int c = 0; c < kNumModes; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int k = 0; k < kNumModes; ++k) {
      row += cm.counts[c][k];
      col += cm.counts[k][c];
    }
    const auto tp = static_cast<double>(cm.counts[c][c]);
    trace += cm.counts[c][c];
    auto& pc = m.per_class[c];
    pc.undefined_precision = col == 0;
    pc.undefined_recall = row == 0;
    pc.precision = col ? tp / static_cast<double>(col) : 0.0;
    pc.recall = row ? tp / static_cast<double>(row) : 0.0;
    const double denom = pc.precision + pc.recall;
    pc.f_score = denom > 0.0 ? 2.0 * pc.precision * pc.recall / denom : 0.0;
  }
  const auto total = cm.total();
  m.accuracy = total ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
  return m;
}

double accuracy(std::span<const int> actual, std::span<const int> predicted) {
  require(actual.size() == predicted.size(), "accuracy: length mismatch");
  if (actual.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hit += actual[i] == predicted[i];
  return static_cast<double>(hit) / static_cast<double>(actual.size());
}

Split stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  auto by = indices_by_class(labels);
  for (int c = 0; c < kNumModes; ++c)
    if (by[c].size() == 1)
      fail(ErrorKind::data, "stratified_split: class " + std::string(kModeNames[c]) + " has a single sample");

  // Largest remainder: floor quotas, then hand out the rounding units by
  // descending fractional part (ties to the lower class index).
  const double exact_total = test_fraction * static_cast<double>(labels.size());
  const auto target_total = static_cast<std::size_t>(std::llround(exact_total));
  std::array<std::size_t, kNumModes> quota{};
  std::array<double, kNumModes> frac{};
  std::size_t assigned = 0;
  for (int c = 0; c < kNumModes; ++c) {
    const double exact = test_fraction * static_cast<double>(by[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    frac[c] = exact - std::floor(exact);
    assigned += quota[c];
  }
  std::array<int, kNumModes> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (int c : order) {
    if (assigned >= target_total) break;
    if (frac[c] > 0.0 && quota[c] < by[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  Rng rng(seed);
  Split s;
  for (int c = 0; c < kNumModes; ++c) {
    auto idx = by[c];
    portable_shuffle(idx.begin(), idx.end(), rng);
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  require(k >= 2, "k must be at least 2");
  auto by = indices_by_class(labels);
  for (int c = 0; c < kNumModes; ++c)
    if (!by[c].empty() && by[c].size() < k)
      fail(ErrorKind::data, "stratified_kfold: class " + std::string(kModeNames[c]) + " has fewer than k samples");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  // Dealing continues across classes so fold totals also stay within one.
  std::size_t cursor = 0;
  for (int c = 0; c < kNumModes; ++c) {
    auto idx = by[c];
    portable_shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) folds[cursor++ % k].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> balance_classes(std::span<const int> labels, std::uint64_t seed) {
  auto by = indices_by_class(labels);
  std::size_t smallest = labels.size();
  for (const auto& v : by)
    if (!v.empty()) smallest = std::min(smallest, v.size());
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& v : by) {
    portable_shuffle(v.begin(), v.end(), rng);
    keep.insert(keep.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(smallest, v.size())));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::string percent1(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

void write_text_report(std::ostream& os, const std::vector<ReportRow>& accuracies, const std::string& cm_title,
                       const ConfusionMatrix& cm) {
  os << "TEST ACCURACY OF ALL MODELS\n";
  os << "Model type\tAccuracy(%)\n";
  for (const auto& r : accuracies) os << r.name << '\t' << percent1(r.accuracy) << '\n';
  os << '\n' << "CONFUSION MATRIX ANALYSIS (" << cm_title << ")\n";
  os << "Mode of Transport";
  for (auto n : kModeNames) os << '\t' << n;
  os << "\tPrecision(%)\tRecall(%)\tF-score(%)\n";
  const auto m = precision_recall_f1(cm);
  for (int a = 0; a < kNumModes; ++a) {
    os << kModeNames[a];
    for (int p = 0; p < kNumModes; ++p) os << '\t' << cm.counts[a][p];
    const auto& pc = m.per_class[a];
    os << '\t' << percent1(pc.precision) << (pc.undefined_precision ? "*" : "") << '\t' << percent1(pc.recall)
       << (pc.undefined_recall ? "*" : "") << '\t' << percent1(pc.f_score) << '\n';
  }
  os << "Overall accuracy(%)\t" << percent1(m.accuracy) << '\n';
  bool flagged = false;
  for (const auto& pc : m.per_class) flagged |= pc.undefined_precision || pc.undefined_recall;
  if (flagged) os << "* zero denominator, reported as 0\n";
}

void write_csv_report(std::ostream& os, const std::vector<ReportRow>& accuracies, const ConfusionMatrix& cm) {
  os << "section,name,walk,bike,transit,car,precision,recall,f_score,accuracy\n";
  for (const auto& r : accuracies) os << "accuracy," << r.name << ",,,,,,,," << percent1(r.accuracy) << '\n';
  const auto m = precision_recall_f1(cm);
  for (int a = 0; a < kNumModes; ++a) {
    os << "confusion," << kModeNames[a];
    for (int p = 0; p < kNumModes; ++p) os << ',' << cm.counts[a][p];
    const auto& pc = m.per_class[a];
    os << ',' << percent1(pc.precision) << ',' << percent1(pc.recall) << ',' << percent1(pc.f_score) << ",\n";
  }
  os << "overall,accuracy,,,,,,,," << percent1(m.accuracy) << '\n';
}

}  // namespace trajmode::eval
