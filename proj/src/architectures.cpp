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

#include "trajmode/architectures.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "trajmode/rng.hpp"

namespace trajmode {

using nn::LayerSpec;

namespace {

struct Block {
  std::size_t kernels;
  std::size_t pool;
};

// Each block is repeated `repeat` times: conv8-kernels followed by maxpool.
std::vector<LayerSpec> stack(const std::vector<Block>& blocks, std::size_t repeat, double slope) {
  std::vector<LayerSpec> out;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < repeat; ++r) {
      out.push_back(LayerSpec::conv(8, b.kernels, 1, slope));
      out.push_back(LayerSpec::maxpool(b.pool, 1));
    }
  }
  out.push_back(LayerSpec::dropout(0.5));
  out.push_back(LayerSpec::dense());
  out.push_back(LayerSpec::softmax());
  return out;
}

}  // namespace

std::vector<LayerSpec> build_model(const std::string& name, double slope) {
  if (name == "A") return stack({{4, 4}}, 1, slope);
  if (name == "B") return stack({{4, 8}, {8, 8}, {16, 8}, {32, 8}}, 1, slope);
  if (name == "C") return stack({{4, 4}, {8, 4}, {16, 4}, {32, 4}}, 5, slope);
  if (name == "D") return stack({{96, 8}, {256, 8}, {384, 8}, {384, 8}, {256, 8}}, 1, slope);
  if (name == "E") return stack({{96, 2}, {256, 2}, {384, 2}, {384, 2}, {256, 2}}, 4, slope);
  if (name == "F") return stack({{128, 8}, {256, 8}, {512, 8}, {1024, 8}, {1024, 8}, {512, 8}}, 1, slope);
  fail(ErrorKind::usage, "unknown model name '" + name + "' (expected A-F)");
}

std::vector<LayerSpec> scale_widths(const std::vector<LayerSpec>& spec, std::size_t divisor) {
  require(divisor >= 1, "width divisor must be >= 1");
  auto out = spec;
  for (auto& l : out)
    if (l.kind == nn::LayerKind::conv)
      l.n_kernels = std::max(std::min(l.n_kernels, kMinScaledWidth), l.n_kernels / divisor);
  return out;
}

namespace {

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

// Sorted draws dealt alternately to a rising and a falling half: the widths
// grow to a single peak and then shrink, like the named wide models.
std::vector<std::size_t> unimodal_widths(const LibraryGrid& grid, std::size_t n, Rng& rng) {
  std::vector<std::size_t> w(n);
  for (auto& v : w) v = pick(grid.kernel_counts, rng);
  std::sort(w.begin(), w.end());
  std::vector<std::size_t> rising, falling;
  for (std::size_t i = 0; i < n; ++i) (i % 2 == 0 ? rising : falling).push_back(w[i]);
  std::reverse(falling.begin(), falling.end());
  rising.insert(rising.end(), falling.begin(), falling.end());
  return rising;
}

NetworkCatalogEntry draw_entry(const LibraryGrid& grid, Rng& rng) {
  const std::size_t n_layers = pick(grid.layer_counts, rng);
  const std::size_t n_conv = n_layers - 1;
  const std::size_t ksize = pick(grid.kernel_sizes, rng);
  const std::size_t cstride = pick(grid.conv_strides, rng);
  const std::size_t psize = pick(grid.pool_sizes, rng);
  const std::size_t pstride = pick(grid.pool_strides, rng);
  const std::size_t epochs = pick(grid.epochs, rng);
  const auto widths = unimodal_widths(grid, n_conv, rng);
  NetworkCatalogEntry e;
  for (std::size_t i = 0; i < n_conv; ++i) {
    e.spec.push_back(LayerSpec::conv(ksize, widths[i], cstride));
    e.spec.push_back(LayerSpec::maxpool(psize, pstride));
  }
  e.spec.push_back(LayerSpec::dropout(0.5));
  e.spec.push_back(LayerSpec::dense());
  e.spec.push_back(LayerSpec::softmax());
  e.epochs = epochs;
  return e;
}

}  // namespace

std::vector<NetworkCatalogEntry> enumerate_library(const LibraryGrid& grid, std::size_t target_count,
                                                   std::uint64_t master_seed) {
  require(target_count >= 6, "library needs at least the six named models");
  for (auto n : grid.layer_counts) require(n >= 2, "layer counts must be >= 2");
  require(!grid.layer_counts.empty() && !grid.kernel_counts.empty() && !grid.kernel_sizes.empty() &&
              !grid.conv_strides.empty() && !grid.pool_sizes.empty() && !grid.pool_strides.empty() &&
              !grid.epochs.empty(),
          "every grid vocabulary must be non-empty");

  std::vector<NetworkCatalogEntry> lib;
  std::set<std::string> seen;
  const std::string names[] = {"A", "B", "C", "D", "E", "F"};
  for (std::size_t i = 0; i < 6; ++i) {
    NetworkCatalogEntry e{names[i], build_model(names[i]), grid.epochs.front(), derive_seed(master_seed, i)};
    seen.insert(nn::to_string(e.spec));
    lib.push_back(std::move(e));
  }
  Rng rng(derive_seed(master_seed, 0x6c6962));
  constexpr std::size_t kMaxAttempts = 200000;
  for (std::size_t attempt = 0; lib.size() < target_count && attempt < kMaxAttempts; ++attempt) {
    auto e = draw_entry(grid, rng);
    if (!seen.insert(nn::to_string(e.spec)).second) continue;
    const auto idx = lib.size();
    e.name = "G" + std::to_string(idx - 5);
    e.seed = derive_seed(master_seed, idx);
    lib.push_back(std::move(e));
  }
  if (lib.size() < target_count)
    fail(ErrorKind::usage, "hyper-parameter grid exhausted after " + std::to_string(lib.size()) + " of " +
                               std::to_string(target_count) + " entries");
  return lib;
}

void write_manifest(std::ostream& os, const std::vector<NetworkCatalogEntry>& library) {
  for (const auto& e : library) os << e.name << '\t' << nn::to_string(e.spec) << '\t' << e.epochs << '\t' << e.seed << '\n';
}

std::vector<NetworkCatalogEntry> read_manifest(std::istream& is) {
  std::vector<NetworkCatalogEntry> lib;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    NetworkCatalogEntry e;
    std::string spec, epochs, seed;
    if (!std::getline(ss, e.name, '\t') || !std::getline(ss, spec, '\t') || !std::getline(ss, epochs, '\t') ||
        !std::getline(ss, seed, '\t'))
      fail(ErrorKind::data, "malformed library manifest line: " + line);
    e.spec = nn::parse_layers(spec);
    e.epochs = std::stoul(epochs);
    e.seed = std::stoull(seed);
    lib.push_back(std::move(e));
  }
  return lib;
}

}  // namespace trajmode
