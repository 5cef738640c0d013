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

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "trajmode/common.hpp"

namespace trajmode::eval {

/// counts[actual][predicted].
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumModes>, kNumModes> counts{};

  std::uint64_t total() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const int> actual, std::span<const int> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool undefined_precision = false;  // empty predicted column
  bool undefined_recall = false;     // empty actual row
};

struct Metrics {
  std::array<ClassMetrics, kNumModes> per_class{};
  double accuracy = 0.0;
};

/// Fractions in [0, 1]; zero denominators give 0 and raise the matching flag.
Metrics precision_recall_f1(const ConfusionMatrix& cm);

double accuracy(std::span<const int> actual, std::span<const int> predicted);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class proportional allocation with largest-remainder rounding. Indices
/// are returned sorted.
Split stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

/// k disjoint folds (sorted indices each); per-class counts differ by at most 1.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Optional class balancing: keeps min-class-count samples of every class.
std::vector<std::size_t> balance_classes(std::span<const int> labels, std::uint64_t seed);

struct ReportRow {
  std::string name;
  double accuracy = 0.0;
};

/// Table-style plain-text report: model accuracies, then the confusion matrix
/// with per-class precision / recall / F-score, percentages to one decimal.
void write_text_report(std::ostream& os, const std::vector<ReportRow>& accuracies, const std::string& cm_title,
                       const ConfusionMatrix& cm);
void write_csv_report(std::ostream& os, const std::vector<ReportRow>& accuracies, const ConfusionMatrix& cm);

std::string percent1(double fraction);

}  // namespace trajmode::eval
