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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trajmode/nn.hpp"

namespace trajmode {

struct NetworkCatalogEntry {
  std::string name;
  std::vector<nn::LayerSpec> spec;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

/// Named models A-F. Every conv uses stride 1, every pool stride 1 and SAME.
std::vector<nn::LayerSpec> build_model(const std::string& name, double leaky_slope = 0.01);

/// Hyper-parameter vocabularies for the level-0 library.
struct LibraryGrid {
  std::vector<std::size_t> layer_counts{6, 7, 11, 21};
  std::vector<std::size_t> kernel_counts{2, 4, 8, 16, 32, 98, 128, 256, 384, 512, 1024};
  std::vector<std::size_t> kernel_sizes{2, 4, 8};
  std::vector<std::size_t> conv_strides{1, 2};
  std::vector<std::size_t> pool_sizes{2, 4, 8};
  std::vector<std::size_t> pool_strides{1, 2};
  std::vector<std::size_t> epochs{20, 50, 100};
};

/// A-F first, then seeded draws from the grid until target_count unique specs
/// exist. Throws Error(usage) if the grid runs dry.
std::vector<NetworkCatalogEntry> enumerate_library(const LibraryGrid& grid, std::size_t target_count,
                                                   std::uint64_t master_seed);

inline constexpr std::size_t kMinScaledWidth = 4;

/// Divides every conv width by `divisor`, never shrinking a layer below
/// kMinScaledWidth kernels (narrower layers are kept as they are). Used for
/// desk-scale runs.
std::vector<nn::LayerSpec> scale_widths(const std::vector<nn::LayerSpec>& spec, std::size_t divisor);

/// One line per entry: name, layer string, epochs, seed (tab separated).
void write_manifest(std::ostream& os, const std::vector<NetworkCatalogEntry>& library);
std::vector<NetworkCatalogEntry> read_manifest(std::istream& is);

}  // namespace trajmode
