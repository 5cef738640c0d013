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

#include "trajmode/ensemble.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace trajmode {

namespace {

void check_same_rows(std::span<const ProbMatrix> mats) {
  require(!mats.empty(), "combiner needs at least one learner");
  for (const auto& m : mats) require(m.size() == mats.front().size(), "learners disagree on row count");
}

int argmax_row(const std::array<double, kNumModes>& r) {
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

}  // namespace

std::vector<int> argmax_labels(const ProbMatrix& m) {
  std::vector<int> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = argmax_row(m.rows[i]);
  return out;
}

VoteResult average_vote(std::span<const ProbMatrix> mats) {
  check_same_rows(mats);
  VoteResult r;
  r.combined.learner_id = "average";
  r.combined.rows.resize(mats.front().size());
  // Extended-precision accumulation: k copies of one row average back to that
  // row exactly.
  const auto k = static_cast<long double>(mats.size());
  for (std::size_t i = 0; i < r.combined.size(); ++i) {
    for (int c = 0; c < kNumModes; ++c) {
      long double acc = 0.0L;
      for (const auto& m : mats) acc += m.rows[i][c];
      r.combined.rows[i][c] = static_cast<double>(acc / k);
    }
  }
  r.labels = argmax_labels(r.combined);
  return r;
}

std::vector<int> majority_vote(std::span<const std::vector<int>> label_sets, std::span<const ProbMatrix> probs) {
  require(!label_sets.empty(), "majority_vote needs at least one learner");
  const std::size_t n = label_sets.front().size();
  for (const auto& s : label_sets) require(s.size() == n, "label vectors differ in length");
  if (!probs.empty()) {
    require(probs.size() == label_sets.size(), "probability matrices must match the label sets");
    check_same_rows(probs);
    require(probs.front().size() == n, "probability rows must match the label count");
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<std::size_t, kNumModes> votes{};
    for (const auto& s : label_sets) {
      require(s[i] >= 0 && s[i] < kNumModes, "label out of range in majority_vote");
      ++votes[static_cast<std::size_t>(s[i])];
    }
    const auto top = *std::max_element(votes.begin(), votes.end());
    std::array<double, kNumModes> mean{};
    for (const auto& m : probs)
      for (int c = 0; c < kNumModes; ++c) mean[c] += m.rows[i][c];
    int best = -1;
    for (int c = 0; c < kNumModes; ++c) {
      if (votes[c] != top) continue;
      if (best < 0 || mean[c] > mean[best]) best = c;
    }
    out[i] = best;
  }
  return out;
}

namespace {

// Quadratic form of the MSE: f(w) = w'Aw - 2b'w + c.
struct Quadratic {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double c = 0.0;

  double value(const Eigen::VectorXd& w) const { return std::max(0.0, w.dot(a * w) - 2.0 * b.dot(w) + c); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (a * w - b); }
};

Quadratic build_quadratic(std::span<const ProbMatrix> mats, std::span<const int> y) {
  const auto k = static_cast<Eigen::Index>(mats.size());
  const std::size_t n = mats.front().size();
  Quadratic q;
  q.a = Eigen::MatrixXd::Zero(k, k);
  q.b = Eigen::VectorXd::Zero(k);
  const double scale = 1.0 / (static_cast<double>(n) * kNumModes);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < k; ++p) {
      const auto& rp = mats[static_cast<std::size_t>(p)].rows[i];
      q.b(p) += scale * rp[static_cast<std::size_t>(y[i])];
      for (Eigen::Index r = p; r < k; ++r) {
        const auto& rr = mats[static_cast<std::size_t>(r)].rows[i];
        double dot = 0.0;
        for (int c = 0; c < kNumModes; ++c) dot += rp[c] * rr[c];
        q.a(p, r) += scale * dot;
      }
    }
  }
  for (Eigen::Index p = 0; p < k; ++p)
    for (Eigen::Index r = 0; r < p; ++r) q.a(p, r) = q.a(r, p);
  q.c = scale * static_cast<double>(n);  // every one-hot target has unit norm
  return q;
}

Eigen::VectorXd project(const Eigen::VectorXd& v) {
  const auto p = project_to_simplex(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

}  // namespace

std::vector<double> project_to_simplex(std::span<const double> v) {
  require(!v.empty(), "cannot project an empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

double combination_mse(std::span<const ProbMatrix> mats, std::span<const int> y, std::span<const double> w) {
  check_same_rows(mats);
  require(w.size() == mats.size() && y.size() == mats.front().size(), "combination_mse: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (int c = 0; c < kNumModes; ++c) {
      double comb = 0.0;
      for (std::size_t k = 0; k < mats.size(); ++k) comb += w[k] * mats[k].rows[i][c];
      const double r = comb - (c == y[i] ? 1.0 : 0.0);
      sum += r * r;
    }
  }
  return sum / (static_cast<double>(y.size()) * kNumModes);
}

WeightFit fit_optimal_weights(std::span<const ProbMatrix> mats, std::span<const int> y, const WeightFitOptions& options) {
  check_same_rows(mats);
  require(y.size() == mats.front().size() && !y.empty(), "fit_optimal_weights: label count mismatch");
  for (int v : y) require(v >= 0 && v < kNumModes, "label out of range");
  const auto k = static_cast<Eigen::Index>(mats.size());
  const Quadratic q = build_quadratic(mats, y);

  WeightFit fit;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  fit.uniform_mse = q.value(w);

  if (!options.simplex) {
    w = q.a.completeOrthogonalDecomposition().solve(q.b);
  } else if (k > 1) {
    double f = q.value(w);
    double step = 1.0;
    for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
      const Eigen::VectorXd g = q.gradient(w);
      if ((w - project(w - g)).norm() < options.tolerance) break;
      // Backtrack until the quadratic upper bound holds; f never increases.
      step = std::min(step * 2.0, 1e6);
      for (;;) {
        const Eigen::VectorXd cand = project(w - step * g);
        const Eigen::VectorXd d = cand - w;
        const double fc = q.value(cand);
        if (fc <= f + g.dot(d) + d.squaredNorm() / (2.0 * step) || step < 1e-14) {
          if (fc <= f) {
            w = cand;
            f = fc;
          }
          break;
        }
        step *= 0.5;
      }
      if (step < 1e-14) break;
    }
  }
  fit.weights.assign(w.data(), w.data() + w.size());
  fit.mse = combination_mse(mats, y, fit.weights);
  return fit;
}

VoteResult weighted_vote(std::span<const ProbMatrix> mats, std::span<const double> w) {
  check_same_rows(mats);
  require(w.size() == mats.size(), "weight count must equal learner count");
  // Equal weights on the simplex are the plain mean.
  if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); }) &&
      std::fabs(w.front() * static_cast<double>(w.size()) - 1.0) < 1e-12) {
    auto r = average_vote(mats);
    r.combined.learner_id = "weighted";
    return r;
  }
  VoteResult r;
  r.combined.learner_id = "weighted";
  r.combined.rows.resize(mats.front().size());
  for (std::size_t i = 0; i < r.combined.size(); ++i) {
    auto& row = r.combined.rows[i];
    row.fill(0.0);
    for (std::size_t k = 0; k < mats.size(); ++k)
      for (int c = 0; c < kNumModes; ++c) row[c] += w[k] * mats[k].rows[i][c];
  }
  r.labels = argmax_labels(r.combined);
  return r;
}

forest::FeatureMatrix stack_features(std::span<const ProbMatrix> mats) {
  check_same_rows(mats);
  forest::FeatureMatrix x(mats.front().size(), kNumModes * mats.size());
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t k = 0; k < mats.size(); ++k)
      for (int c = 0; c < kNumModes; ++c) x.at(i, k * kNumModes + c) = mats[k].rows[i][c];
  return x;
}

}  // namespace trajmode
