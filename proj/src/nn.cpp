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

#include "trajmode/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "trajmode/binio.hpp"

namespace trajmode::nn {

SamePadding same_padding(std::size_t length, std::size_t window, std::size_t stride) {
  require(stride >= 1 && window >= 1, "window and stride must be positive");
  const std::size_t out = (length + stride - 1) / stride;
  const std::size_t needed = out == 0 ? 0 : (out - 1) * stride + window;
  const std::size_t pad_total = needed > length ? needed - length : 0;
  return {out, pad_total / 2};
}

// ---------------------------------------------------------------------------

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;
using ConstView = Eigen::Map<const RowMat, 0, Strided>;
using MutView = Eigen::Map<RowMat, 0, Strided>;

// Output rows [first, first + count) read input row l * stride + tap - pad_left.
struct TapRange {
  std::size_t first = 0;
  std::size_t count = 0;
  std::size_t src = 0;  // input row of the first output row
};

TapRange tap_range(std::size_t length, std::size_t stride, const SamePadding& pad, std::size_t tap) {
  const auto lo = static_cast<std::ptrdiff_t>(pad.pad_left) - static_cast<std::ptrdiff_t>(tap);
  const auto hi = static_cast<std::ptrdiff_t>(length) - 1 + lo;
  if (hi < 0) return {};
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const std::ptrdiff_t first = lo > 0 ? (lo + s - 1) / s : 0;
  const std::ptrdiff_t last = std::min<std::ptrdiff_t>(hi / s, static_cast<std::ptrdiff_t>(pad.out_length) - 1);
  if (last < first) return {};
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last - first + 1),
          static_cast<std::size_t>(first * s - lo)};
}

}  // namespace

Tensor2D conv1d_forward(const Tensor2D& x, std::span<const double> kernels, std::span<const double> bias,
                        std::size_t kernel_size, std::size_t stride, double leaky_slope, Tensor2D* preact) {
  const std::size_t cin = x.channels;
  const std::size_t cout = bias.size();
  if (kernel_size == 0 || kernels.size() != kernel_size * cin * cout || x.data.size() != x.length * cin)
    fail(ErrorKind::usage, "conv1d_forward: shape mismatch");
  const auto pad = same_padding(x.length, kernel_size, stride);
  const auto ci = static_cast<Eigen::Index>(cin);
  const auto co = static_cast<Eigen::Index>(cout);
  Tensor2D z(pad.out_length, cout);
  MutView(z.data.data(), static_cast<Eigen::Index>(pad.out_length), co, Strided(co)).rowwise() =
      Eigen::Map<const Eigen::RowVectorXd>(bias.data(), co);
  for (std::size_t d = 0; d < kernel_size; ++d) {
    const auto r = tap_range(x.length, stride, pad, d);
    if (r.count == 0) continue;
    const auto n = static_cast<Eigen::Index>(r.count);
    const ConstView xs(&x.data[r.src * cin], n, ci, Strided(static_cast<Eigen::Index>(stride * cin)));
    const ConstView w(&kernels[d * cin * cout], ci, co, Strided(co));
    MutView(&z.data[r.first * cout], n, co, Strided(co)).noalias() += xs * w;
  }
  Tensor2D y = z;
  for (auto& v : y.data)
    if (v < 0.0) v *= leaky_slope;
  if (preact) *preact = std::move(z);
  return y;
}

Tensor2D conv1d_backward(const Tensor2D& x, std::span<const double> kernels, const Tensor2D& preact,
                         const Tensor2D& grad_out, std::size_t kernel_size, std::size_t stride,
                         double leaky_slope, std::span<double> grad_kernels, std::span<double> grad_bias) {
  const std::size_t cin = x.channels;
  const std::size_t cout = preact.channels;
  const auto pad = same_padding(x.length, kernel_size, stride);
  if (grad_out.length != pad.out_length || grad_out.channels != cout || grad_kernels.size() != kernels.size() ||
      grad_bias.size() != cout)
    fail(ErrorKind::usage, "conv1d_backward: shape mismatch");
  const auto ci = static_cast<Eigen::Index>(cin);
  const auto co = static_cast<Eigen::Index>(cout);
  const auto xstride = Strided(static_cast<Eigen::Index>(stride * cin));
  Tensor2D dz = grad_out;
  for (std::size_t i = 0; i < dz.data.size(); ++i)
    if (preact.data[i] < 0.0) dz.data[i] *= leaky_slope;
  Eigen::Map<Eigen::RowVectorXd>(grad_bias.data(), co) +=
      ConstView(dz.data.data(), static_cast<Eigen::Index>(pad.out_length), co, Strided(co)).colwise().sum();
  Tensor2D dx(x.length, cin);
  for (std::size_t d = 0; d < kernel_size; ++d) {
    const auto r = tap_range(x.length, stride, pad, d);
    if (r.count == 0) continue;
    const auto n = static_cast<Eigen::Index>(r.count);
    const ConstView g(&dz.data[r.first * cout], n, co, Strided(co));
    const ConstView xs(&x.data[r.src * cin], n, ci, xstride);
    const ConstView w(&kernels[d * cin * cout], ci, co, Strided(co));
    MutView(&grad_kernels[d * cin * cout], ci, co, Strided(co)).noalias() += xs.transpose() * g;
    MutView(&dx.data[r.src * cin], n, ci, xstride).noalias() += g * w.transpose();
  }
  return dx;
}

Tensor2D maxpool1d_forward(const Tensor2D& x, std::size_t pool_size, std::size_t stride,
                           std::vector<std::size_t>* argmax) {
  const std::size_t ch = x.channels;
  const auto pad = same_padding(x.length, pool_size, stride);
  Tensor2D y(pad.out_length, ch, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> local;
  auto& am = argmax ? *argmax : local;
  am.assign(y.size(), kNoArgmax);
  for (std::size_t l = 0; l < pad.out_length; ++l) {
    double* yrow = &y.data[l * ch];
    std::size_t* arow = &am[l * ch];
    for (std::size_t d = 0; d < pool_size; ++d) {
      const auto src = static_cast<std::ptrdiff_t>(l * stride + d) - static_cast<std::ptrdiff_t>(pad.pad_left);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(x.length)) continue;
      const std::size_t base = static_cast<std::size_t>(src) * ch;
      const double* xrow = &x.data[base];
      for (std::size_t c = 0; c < ch; ++c) {
        if (xrow[c] > yrow[c]) {
          yrow[c] = xrow[c];
          arow[c] = base + c;
        }
      }
    }
  }
  return y;
}

Tensor2D maxpool1d_backward(const Tensor2D& grad_out, const std::vector<std::size_t>& argmax,
                            std::size_t in_length, std::size_t in_channels) {
  Tensor2D dx(in_length, in_channels);
  for (std::size_t o = 0; o < grad_out.data.size(); ++o)
    if (argmax[o] != kNoArgmax) dx.data[argmax[o]] += grad_out.data[o];
  return dx;
}

Tensor2D apply_dropout(const Tensor2D& x, double p, bool training, Rng* rng, std::vector<double>* mask) {
  require(p >= 0.0 && p < 1.0, "dropout probability must lie in [0, 1)");
  if (!training || p == 0.0) {
    if (mask) mask->assign(x.size(), 1.0);
    return x;
  }
  require(rng != nullptr, "training-mode dropout needs an rng");
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor2D y = x;
  std::vector<double> local;
  auto& m = mask ? *mask : local;
  m.resize(x.size());
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    m[i] = uniform01(*rng) < p ? 0.0 : keep_scale;
    y.data[i] *= m[i];
  }
  return y;
}

std::vector<double> dense_forward(std::span<const double> x, std::span<const double> weights,
                                  std::span<const double> bias) {
  const std::size_t n_out = bias.size();
  if (weights.size() != x.size() * n_out) fail(ErrorKind::usage, "dense_forward: shape mismatch");
  std::vector<double> out(bias.begin(), bias.end());
  for (std::size_t f = 0; f < x.size(); ++f) {
    const double xv = x[f];
    const double* wrow = &weights[f * n_out];
    for (std::size_t j = 0; j < n_out; ++j) out[j] += xv * wrow[j];
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += (p[i] = std::exp(logits[i] - mx));
  for (auto& v : p) v /= sum;
  return p;
}

std::array<double, kNumModes> dense_softmax_forward(std::span<const double> x, std::span<const double> weights,
                                                    std::span<const double> bias) {
  require(bias.size() == kNumModes, "dense_softmax_forward expects 4 outputs");
  const auto p = softmax(dense_forward(x, weights, bias));
  std::array<double, kNumModes> out{};
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

double cross_entropy_loss(std::span<const double> probs, int label) {
  require(label >= 0 && static_cast<std::size_t>(label) < probs.size(), "label out of range");
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-12));
}

// ---------------------------------------------------------------------------

LayerSpec LayerSpec::conv(std::size_t kernel_size, std::size_t n_kernels, std::size_t stride, double slope) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.kernel_size = kernel_size;
  s.n_kernels = n_kernels;
  s.stride = stride;
  s.leaky_slope = slope;
  return s;
}
LayerSpec LayerSpec::maxpool(std::size_t pool_size, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.pool_size = pool_size;
  s.stride = stride;
  return s;
}
LayerSpec LayerSpec::dropout(double p) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.dropout_p = p;
  return s;
}
LayerSpec LayerSpec::dense(std::size_t n_outputs) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.n_outputs = n_outputs;
  return s;
}
LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::softmax;
  return s;
}

namespace {

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(const std::vector<LayerSpec>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ',';
    switch (l.kind) {
      case LayerKind::conv:
        out += "conv" + std::to_string(l.kernel_size) + "-" + std::to_string(l.n_kernels) + "/" +
               std::to_string(l.stride);
        if (l.leaky_slope != 0.01) out += "@" + format_real(l.leaky_slope);
        break;
      case LayerKind::maxpool:
        out += "maxpool" + std::to_string(l.pool_size) + "/" + std::to_string(l.stride);
        break;
      case LayerKind::dropout: out += "dropout" + format_real(l.dropout_p); break;
      case LayerKind::dense: out += "dense" + std::to_string(l.n_outputs); break;
      case LayerKind::softmax: out += "softmax"; break;
    }
  }
  return out;
}

std::vector<LayerSpec> parse_layers(const std::string& text) {
  std::vector<LayerSpec> layers;
  std::stringstream ss(text);
  std::string tok;
  auto bad = [&]() -> void { fail(ErrorKind::data, "cannot parse layer token '" + tok + "'"); };
  while (std::getline(ss, tok, ',')) {
    try {
      if (tok.rfind("conv", 0) == 0) {
        const auto dash = tok.find('-');
        const auto slash = tok.find('/');
        const auto at = tok.find('@');
        if (dash == std::string::npos || slash == std::string::npos) bad();
        const double slope = at == std::string::npos ? 0.01 : std::stod(tok.substr(at + 1));
        layers.push_back(LayerSpec::conv(std::stoul(tok.substr(4, dash - 4)),
                                         std::stoul(tok.substr(dash + 1, slash - dash - 1)),
                                         std::stoul(tok.substr(slash + 1, at - slash - 1)), slope));
      } else if (tok.rfind("maxpool", 0) == 0) {
        const auto slash = tok.find('/');
        if (slash == std::string::npos) bad();
        layers.push_back(LayerSpec::maxpool(std::stoul(tok.substr(7, slash - 7)), std::stoul(tok.substr(slash + 1))));
      } else if (tok.rfind("dropout", 0) == 0) {
        layers.push_back(LayerSpec::dropout(std::stod(tok.substr(7))));
      } else if (tok.rfind("dense", 0) == 0) {
        layers.push_back(LayerSpec::dense(std::stoul(tok.substr(5))));
      } else if (tok == "softmax") {
        layers.push_back(LayerSpec::softmax());
      } else {
        bad();
      }
    } catch (const std::logic_error&) {
      bad();
    }
  }
  return layers;
}

std::vector<Shape> infer_shapes(const std::vector<LayerSpec>& layers, Shape input, bool strict_vocab) {
  auto in_vocab = [](std::size_t v) { return v == 2 || v == 4 || v == 8; };
  require(input.length > 0 && input.channels > 0, "input shape must be non-empty");
  require(layers.size() >= 2 && layers.back().kind == LayerKind::softmax &&
              layers[layers.size() - 2].kind == LayerKind::dense,
          "network must end with dense + softmax");
  std::vector<Shape> shapes{input};
  Shape cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    switch (l.kind) {
      case LayerKind::conv:
        require(l.kernel_size >= 1 && l.n_kernels > 0, "conv layer needs kernel_size and n_kernels");
        require(l.stride == 1 || l.stride == 2, "stride must be 1 or 2");
        if (strict_vocab) require(in_vocab(l.kernel_size), "conv kernel size must be 2, 4 or 8");
        cur = {same_padding(cur.length, l.kernel_size, l.stride).out_length, l.n_kernels};
        break;
      case LayerKind::maxpool:
        require(l.pool_size >= 1, "pool size must be positive");
        require(l.stride == 1 || l.stride == 2, "stride must be 1 or 2");
        if (strict_vocab) require(in_vocab(l.pool_size), "pool size must be 2, 4 or 8");
        cur = {same_padding(cur.length, l.pool_size, l.stride).out_length, cur.channels};
        break;
      case LayerKind::dropout:
        require(l.dropout_p >= 0.0 && l.dropout_p < 1.0, "dropout probability must lie in [0, 1)");
        break;
      case LayerKind::dense:
        require(i + 2 == layers.size(), "only one dense layer, directly before softmax, is supported");
        require(l.n_outputs == kNumModes, "dense layer must produce 4 logits");
        cur = {1, l.n_outputs};
        break;
      case LayerKind::softmax: break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::size_t weighted_layer_count(const std::vector<LayerSpec>& layers) {
  return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) {
    return l.kind == LayerKind::conv || l.kind == LayerKind::dense;
  }));
}

// ---------------------------------------------------------------------------

Network::Network(std::vector<LayerSpec> layers, Shape input, std::uint64_t seed)
    : layers_(std::move(layers)), input_(input), seed_(seed) {
  shapes_ = infer_shapes(layers_, input_);
  blocks_.resize(layers_.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const Shape in = shapes_[i];
    auto& b = blocks_[i];
    if (l.kind == LayerKind::conv) {
      b.w_size = l.kernel_size * in.channels * l.n_kernels;
      b.b_size = l.n_kernels;
    } else if (l.kind == LayerKind::dense) {
      b.w_size = in.length * in.channels * l.n_outputs;
      b.b_size = l.n_outputs;
    }
    b.w_offset = total;
    b.b_offset = total + b.w_size;
    total += b.w_size + b.b_size;
  }
  params_.assign(total, 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const Shape in = shapes_[i];
    std::size_t fan_in = 0;
    if (l.kind == LayerKind::conv) fan_in = l.kernel_size * in.channels;
    if (l.kind == LayerKind::dense) fan_in = in.length * in.channels;
    if (fan_in == 0) continue;
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& w : layer_weights(i)) w = std * standard_normal(rng);
  }
}

std::span<double> Network::layer_weights(std::size_t i) {
  return std::span<double>(params_).subspan(blocks_[i].w_offset, blocks_[i].w_size);
}
std::span<double> Network::layer_bias(std::size_t i) {
  return std::span<double>(params_).subspan(blocks_[i].b_offset, blocks_[i].b_size);
}
std::span<const double> Network::layer_weights(std::size_t i) const {
  return std::span<const double>(params_).subspan(blocks_[i].w_offset, blocks_[i].w_size);
}
std::span<const double> Network::layer_bias(std::size_t i) const {
  return std::span<const double>(params_).subspan(blocks_[i].b_offset, blocks_[i].b_size);
}

void Network::set_params(std::span<const double> p) {
  require(p.size() == params_.size(), "parameter count mismatch");
  std::copy(p.begin(), p.end(), params_.begin());
}

ForwardCache Network::forward(const Tensor2D& x, bool training, Rng* rng) const {
  if (x.length != input_.length || x.channels != input_.channels)
    fail(ErrorKind::usage, "network input shape mismatch: expected " + std::to_string(input_.length) + "x" +
                               std::to_string(input_.channels));
  ForwardCache cache;
  const std::size_t n = layers_.size();
  cache.inputs.resize(n);
  cache.preacts.resize(n);
  cache.argmax.resize(n);
  cache.masks.resize(n);
  Tensor2D cur = x;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = layers_[i];
    Tensor2D next;
    switch (l.kind) {
      case LayerKind::conv:
        next = conv1d_forward(cur, layer_weights(i), layer_bias(i), l.kernel_size, l.stride, l.leaky_slope,
                              &cache.preacts[i]);
        break;
      case LayerKind::maxpool: next = maxpool1d_forward(cur, l.pool_size, l.stride, &cache.argmax[i]); break;
      case LayerKind::dropout: next = apply_dropout(cur, l.dropout_p, training, rng, &cache.masks[i]); break;
      case LayerKind::dense: {
        cache.logits = dense_forward(cur.data, layer_weights(i), layer_bias(i));
        next = Tensor2D(1, cache.logits.size());
        next.data = cache.logits;
        break;
      }
      case LayerKind::softmax: {
        const auto p = softmax(cur.data);
        std::copy(p.begin(), p.end(), cache.probs.begin());
        next = cur;
        break;
      }
    }
    cache.inputs[i] = std::move(cur);
    cur = std::move(next);
  }
  return cache;
}

std::array<double, kNumModes> Network::predict_proba(const Tensor2D& x) const { return forward(x, false, nullptr).probs; }

double Network::backward(const ForwardCache& cache, int label, std::span<double> grad, double scale) const {
  require(grad.size() == params_.size(), "gradient buffer size mismatch");
  const double loss = cross_entropy_loss(cache.probs, label);
  // Softmax + cross-entropy: d(loss)/d(logits) = p - onehot.
  Tensor2D g(1, kNumModes);
  for (int j = 0; j < kNumModes; ++j) g.data[j] = scale * (cache.probs[j] - (j == label ? 1.0 : 0.0));
  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    const auto& l = layers_[ii];
    const Tensor2D& in = cache.inputs[ii];
    const auto& blk = blocks_[ii];
    switch (l.kind) {
      case LayerKind::softmax: break;
      case LayerKind::dense: {
        const std::size_t n_out = l.n_outputs;
        const auto w = layer_weights(ii);
        auto gw = grad.subspan(blk.w_offset, blk.w_size);
        auto gb = grad.subspan(blk.b_offset, blk.b_size);
        Tensor2D dx(in.length, in.channels);
        for (std::size_t j = 0; j < n_out; ++j) gb[j] += g.data[j];
        for (std::size_t f = 0; f < in.data.size(); ++f) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n_out; ++j) {
            gw[f * n_out + j] += in.data[f] * g.data[j];
            acc += w[f * n_out + j] * g.data[j];
          }
          dx.data[f] = acc;
        }
        g = std::move(dx);
        break;
      }
      case LayerKind::dropout: {
        const auto& m = cache.masks[ii];
        for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] *= m[k];
        break;
      }
      case LayerKind::maxpool: g = maxpool1d_backward(g, cache.argmax[ii], in.length, in.channels); break;
      case LayerKind::conv:
        g = conv1d_backward(in, layer_weights(ii), cache.preacts[ii], g, l.kernel_size, l.stride, l.leaky_slope,
                            grad.subspan(blk.w_offset, blk.w_size), grad.subspan(blk.b_offset, blk.b_size));
        break;
    }
  }
  return loss;
}

double Network::loss_and_gradient(std::span<const Tensor2D* const> batch, std::span<const int> labels,
                                  std::span<double> grad, bool training, Rng* rng) const {
  require(batch.size() == labels.size() && !batch.empty(), "batch/label size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto cache = forward(*batch[s], training, rng);
    loss += backward(cache, labels[s], grad, scale);
  }
  return loss * scale;
}

// ---------------------------------------------------------------------------

void adam_step(std::span<double> weights, std::span<const double> grads, AdamState& st) {
  require(weights.size() == grads.size() && st.m.size() == weights.size() && st.v.size() == weights.size(),
          "adam_step: shape mismatch");
  ++st.t;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double g = grads[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    weights[i] -= st.learning_rate * mhat / (std::sqrt(vhat) + st.epsilon);
  }
}

namespace {

int argmax4(const std::array<double, kNumModes>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

double accuracy(const Network& net, const LabeledSet& set) {
  if (set.inputs.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < set.inputs.size(); ++i) hit += argmax4(net.predict_proba(set.inputs[i])) == set.labels[i];
  return static_cast<double>(hit) / static_cast<double>(set.inputs.size());
}

TrainHistory train(Network& net, const LabeledSet& train_set, const LabeledSet& valid_set, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  require(!train_set.inputs.empty() && train_set.inputs.size() == train_set.labels.size(), "empty training set");
  require(config.batch_size >= 1 && config.epochs >= 1, "batch size and epochs must be positive");
  Rng rng(config.seed);
  AdamState adam(net.num_params(), config.learning_rate);
  std::vector<double> grad(net.num_params());
  std::vector<std::size_t> order(train_set.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  std::vector<double> best_params(net.params().begin(), net.params().end());
  double best_valid = -1.0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    portable_shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto idx = order[k];
        const auto cache = net.forward(train_set.inputs[idx], true, &rng);
        hits += argmax4(cache.probs) == train_set.labels[idx];
        batch_loss += net.backward(cache, train_set.labels[idx], grad, scale);
      }
      if (!std::isfinite(batch_loss))
        fail(ErrorKind::diverged, "training diverged (non-finite loss) in epoch " + std::to_string(epoch));
      loss_sum += batch_loss;
      adam_step(net.params(), grad, adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
    rec.valid_accuracy = valid_set.inputs.empty() ? rec.train_accuracy : accuracy(net, valid_set);
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.valid_accuracy > best_valid) {
      best_valid = rec.valid_accuracy;
      history.best_epoch = epoch;
      best_params.assign(net.params().begin(), net.params().end());
      stale = 0;
    } else if (++stale > config.patience) {
      history.stopped_early = true;
      break;
    }
  }
  net.set_params(best_params);
  return history;
}

// ---------------------------------------------------------------------------

void write_model(std::ostream& os, const ModelFile& model) {
  const auto& net = model.network;
  binio::put_magic(os, "MNET");
  binio::put_u8(os, 1);
  binio::put_string(os, model.name);
  binio::put_u64(os, model.train_seed);
  binio::put_u64(os, net.seed());
  binio::put_u32(os, kNumModes);
  for (auto n : kModeNames) binio::put_string(os, n);
  binio::put_u32(os, static_cast<std::uint32_t>(net.input_shape().length));
  binio::put_u32(os, static_cast<std::uint32_t>(net.input_shape().channels));
  binio::put_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    binio::put_u8(os, static_cast<std::uint8_t>(l.kind));
    binio::put_u32(os, static_cast<std::uint32_t>(l.kernel_size));
    binio::put_u32(os, static_cast<std::uint32_t>(l.n_kernels));
    binio::put_u32(os, static_cast<std::uint32_t>(l.pool_size));
    binio::put_u32(os, static_cast<std::uint32_t>(l.stride));
    binio::put_f64(os, l.leaky_slope);
    binio::put_f64(os, l.dropout_p);
    binio::put_u32(os, static_cast<std::uint32_t>(l.n_outputs));
  }
  binio::put_u32(os, static_cast<std::uint32_t>(model.normalizer.mean.size()));
  for (double v : model.normalizer.mean) binio::put_f64(os, v);
  for (double v : model.normalizer.stddev) binio::put_f64(os, v);
  binio::put_u64(os, net.num_params());
  for (double v : net.params()) binio::put_f64(os, v);
}

ModelFile read_model(std::istream& is) {
  binio::expect_magic(is, "MNET");
  if (binio::get_u8(is) != 1) fail(ErrorKind::data, "unsupported MNET version");
  ModelFile m;
  m.name = binio::get_string(is);
  m.train_seed = binio::get_u64(is);
  const auto net_seed = binio::get_u64(is);
  if (binio::get_u32(is) != kNumModes) fail(ErrorKind::data, "MNET class count mismatch");
  for (auto n : kModeNames)
    if (binio::get_string(is) != n) fail(ErrorKind::data, "MNET class ordering mismatch");
  Shape input;
  input.length = binio::get_u32(is);
  input.channels = binio::get_u32(is);
  const auto n_layers = binio::get_u32(is);
  std::vector<LayerSpec> layers(n_layers);
  for (auto& l : layers) {
    const auto kind = binio::get_u8(is);
    if (kind > static_cast<std::uint8_t>(LayerKind::softmax)) fail(ErrorKind::data, "MNET unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.kernel_size = binio::get_u32(is);
    l.n_kernels = binio::get_u32(is);
    l.pool_size = binio::get_u32(is);
    l.stride = binio::get_u32(is);
    l.leaky_slope = binio::get_f64(is);
    l.dropout_p = binio::get_f64(is);
    l.n_outputs = binio::get_u32(is);
  }
  const auto n_norm = binio::get_u32(is);
  m.normalizer.mean.resize(n_norm);
  m.normalizer.stddev.resize(n_norm);
  for (auto& v : m.normalizer.mean) v = binio::get_f64(is);
  for (auto& v : m.normalizer.stddev) v = binio::get_f64(is);
  try {
    m.network = Network(std::move(layers), input, net_seed);
  } catch (const Error& e) {
    fail(ErrorKind::data, std::string("MNET layer stack invalid: ") + e.what());
  }
  const auto n_params = binio::get_u64(is);
  if (n_params != m.network.num_params()) fail(ErrorKind::data, "MNET parameter count mismatch");
  for (auto& v : m.network.params()) v = binio::get_f64(is);
  return m;
}

void save_model(const std::string& path, const ModelFile& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::data, "cannot write " + path);
  write_model(os, model);
  if (!os) fail(ErrorKind::data, "write failed for " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "missing model file " + path);
  return read_model(is);
}

}  // namespace trajmode::nn
