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

// A small 1-D CNN engine: SAME-padded convolution with Leaky ReLU, max-pooling,
// inverted dropout, a single dense layer and softmax, trained with Adam on mean
// cross-entropy. Everything runs in double precision and is deterministic given
// a seed.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "trajmode/common.hpp"
#include "trajmode/rng.hpp"

namespace trajmode::nn {

struct Tensor2D {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> data;  // row-major: data[l * channels + c]

  Tensor2D() = default;
  Tensor2D(std::size_t l, std::size_t c, double fill = 0.0) : length(l), channels(c), data(l * c, fill) {}

  double& at(std::size_t l, std::size_t c) { return data[l * channels + c]; }
  double at(std::size_t l, std::size_t c) const { return data[l * channels + c]; }
  std::size_t size() const { return data.size(); }
};

struct SamePadding {
  std::size_t out_length;
  std::size_t pad_left;
};

/// TensorFlow-style SAME: out = ceil(len / stride), extra padding goes to the right.
SamePadding same_padding(std::size_t length, std::size_t window, std::size_t stride);

// ---------------------------------------------------------------------------
// Layer primitives

/// kernels are laid out [kernel_size][c_in][n_kernels]. When `preact` is non-null
/// it receives the values before the activation.
Tensor2D conv1d_forward(const Tensor2D& x, std::span<const double> kernels, std::span<const double> bias,
                        std::size_t kernel_size, std::size_t stride, double leaky_slope,
                        Tensor2D* preact = nullptr);

/// Accumulates into grad_kernels / grad_bias and returns the gradient w.r.t. x.
Tensor2D conv1d_backward(const Tensor2D& x, std::span<const double> kernels, const Tensor2D& preact,
                         const Tensor2D& grad_out, std::size_t kernel_size, std::size_t stride,
                         double leaky_slope, std::span<double> grad_kernels, std::span<double> grad_bias);

inline constexpr std::size_t kNoArgmax = static_cast<std::size_t>(-1);

/// Per-channel window max. argmax[o] holds the flat input index feeding output o.
Tensor2D maxpool1d_forward(const Tensor2D& x, std::size_t pool_size, std::size_t stride,
                           std::vector<std::size_t>* argmax = nullptr);

Tensor2D maxpool1d_backward(const Tensor2D& grad_out, const std::vector<std::size_t>& argmax,
                            std::size_t in_length, std::size_t in_channels);

/// Inverted dropout. `mask` receives the per-unit multiplier (0 or 1/(1-p)).
Tensor2D apply_dropout(const Tensor2D& x, double p, bool training, Rng* rng, std::vector<double>* mask = nullptr);

/// weights laid out [features][n_out].
std::vector<double> dense_forward(std::span<const double> x, std::span<const double> weights,
                                  std::span<const double> bias);

std::vector<double> softmax(std::span<const double> logits);

std::array<double, kNumModes> dense_softmax_forward(std::span<const double> x, std::span<const double> weights,
                                                    std::span<const double> bias);

double cross_entropy_loss(std::span<const double> probs, int label);

// ---------------------------------------------------------------------------
// Network description

enum class LayerKind : std::uint8_t { conv = 0, maxpool = 1, dropout = 2, dense = 3, softmax = 4 };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::size_t kernel_size = 0;  // conv
  std::size_t n_kernels = 0;    // conv
  std::size_t pool_size = 0;    // maxpool
  std::size_t stride = 1;       // conv, maxpool
  double leaky_slope = 0.01;    // conv
  double dropout_p = 0.5;       // dropout
  std::size_t n_outputs = kNumModes;  // dense

  static LayerSpec conv(std::size_t kernel_size, std::size_t n_kernels, std::size_t stride = 1, double slope = 0.01);
  static LayerSpec maxpool(std::size_t pool_size, std::size_t stride = 1);
  static LayerSpec dropout(double p = 0.5);
  static LayerSpec dense(std::size_t n_outputs = kNumModes);
  static LayerSpec softmax();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Compact text form, e.g. "conv8-4/1,maxpool4/1,dropout0.5,dense4,softmax".
std::string to_string(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> parse_layers(const std::string& text);

struct Shape {
  std::size_t length;
  std::size_t channels;
};

/// Shape after every layer; throws on an invalid stack. With `strict_vocab`
/// kernel/pool sizes must come from {2, 4, 8}.
std::vector<Shape> infer_shapes(const std::vector<LayerSpec>& layers, Shape input, bool strict_vocab = false);

/// Number of conv + dense layers, the way architectures are usually counted.
std::size_t weighted_layer_count(const std::vector<LayerSpec>& layers);

// ---------------------------------------------------------------------------
// Network

struct ForwardCache {
  std::vector<Tensor2D> inputs;              // input to each layer
  std::vector<Tensor2D> preacts;             // conv pre-activations (empty otherwise)
  std::vector<std::vector<std::size_t>> argmax;
  std::vector<std::vector<double>> masks;
  std::vector<double> logits;
  std::array<double, kNumModes> probs{};
};

class Network {
 public:
  Network() = default;
  /// Zero biases, He-normal weights seeded from `seed`.
  Network(std::vector<LayerSpec> layers, Shape input, std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  Shape input_shape() const { return input_; }
  std::uint64_t seed() const { return seed_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  /// Offsets of (weights, bias) blocks of layer i inside params(); both empty
  /// for parameter-free layers.
  std::span<double> layer_weights(std::size_t i);
  std::span<double> layer_bias(std::size_t i);
  std::span<const double> layer_weights(std::size_t i) const;
  std::span<const double> layer_bias(std::size_t i) const;

  ForwardCache forward(const Tensor2D& x, bool training, Rng* rng) const;
  std::array<double, kNumModes> predict_proba(const Tensor2D& x) const;

  /// Adds d(loss)/d(params) * scale into grad; returns the sample loss.
  double backward(const ForwardCache& cache, int label, std::span<double> grad, double scale) const;

  /// Mean cross-entropy over the batch and its exact gradient.
  double loss_and_gradient(std::span<const Tensor2D* const> batch, std::span<const int> labels,
                           std::span<double> grad, bool training, Rng* rng) const;

  void set_params(std::span<const double> p);

 private:
  struct Block {
    std::size_t w_offset = 0, w_size = 0, b_offset = 0, b_size = 0;
  };
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::vector<Block> blocks_;
  std::vector<double> params_;
  Shape input_{0, 0};
  std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------------------
// Optimization

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n = 0, double lr = 1e-4) : m(n, 0.0), v(n, 0.0), learning_rate(lr) {}
};

void adam_step(std::span<double> weights, std::span<const double> grads, AdamState& state);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::size_t patience = 5;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // running accuracy over the epoch's training batches
  double valid_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

struct LabeledSet {
  std::vector<Tensor2D> inputs;
  std::vector<int> labels;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam with early stopping on validation accuracy; the best epoch's
/// weights are restored. Throws Error(diverged) if the loss becomes non-finite.
TrainHistory train(Network& net, const LabeledSet& train_set, const LabeledSet& valid_set,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

double accuracy(const Network& net, const LabeledSet& set);

// ---------------------------------------------------------------------------
// Persistence (MNET)

/// Per-channel standardization statistics; stored with the model.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct ModelFile {
  Network network;
  Normalizer normalizer;
  std::uint64_t train_seed = 0;
  std::string name;
};

void write_model(std::ostream& os, const ModelFile& model);
ModelFile read_model(std::istream& is);
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace trajmode::nn
