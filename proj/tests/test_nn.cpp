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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nn_checks.hpp"
#include "oracles.hpp"
#include "trajmode/architectures.hpp"
#include "trajmode/nn.hpp"

using namespace trajmode;
using namespace trajmode::nn;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * standard_normal(rng);
  return v;
}

// Two obvious classes: a positive or a negative ramp on the first channel.
LabeledSet toy_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    Tensor2D t(16, 2);
    for (std::size_t l = 0; l < 16; ++l) {
      t.at(l, 0) = (y ? 1.0 : -1.0) * (0.5 + 0.05 * static_cast<double>(l)) + 0.1 * standard_normal(rng);
      t.at(l, 1) = 0.1 * standard_normal(rng);
    }
    s.inputs.push_back(t);
    s.labels.push_back(y);
  }
  return s;
}

std::vector<LayerSpec> small_net() {
  return {LayerSpec::conv(4, 3), LayerSpec::maxpool(2), LayerSpec::dropout(0.5), LayerSpec::dense(),
          LayerSpec::softmax()};
}

}  // namespace

TEST_CASE("SAME padding arithmetic") {
  CHECK(same_padding(70, 8, 1).out_length == 70);
  CHECK(same_padding(70, 8, 1).pad_left == 3);
  CHECK(same_padding(70, 8, 2).out_length == 35);
  CHECK(same_padding(71, 4, 2).out_length == 36);
  CHECK(same_padding(5, 2, 1).pad_left == 0);
  CHECK(same_padding(1, 8, 2).out_length == 1);
}

TEST_CASE("conv keeps length 70 at stride 1 and the delta kernel is the identity") {
  Rng rng(1);
  Tensor2D x(70, 1);
  for (auto& v : x.data) v = 1.0 + uniform01(rng);
  for (std::size_t ks : {2u, 4u, 8u}) {
    std::vector<double> k(ks, 0.0);
    k[same_padding(70, ks, 1).pad_left] = 1.0;
    const auto y = conv1d_forward(x, k, std::vector<double>{0.0}, ks, 1, 0.01);
    REQUIRE(y.length == 70);
    CHECK(y.data == x.data);
  }
}

TEST_CASE("conv and pool agree with the padded-loop oracles") {
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t len = 1 + uniform_index(rng, 40), cin = 1 + uniform_index(rng, 4), cout = 1 + uniform_index(rng, 5);
    const std::size_t ks = std::size_t{2} << uniform_index(rng, 3), stride = 1 + uniform_index(rng, 2);
    const auto x = oracle::random_tensor(rng, len, cin);
    const auto k = random_vec(rng, ks * cin * cout), b = random_vec(rng, cout);
    const auto y = conv1d_forward(x, k, b, ks, stride, 0.01);
    const auto ref = oracle::naive_conv(x, k, b, ks, stride, 0.01);
    REQUIRE(y.length == ref.length);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data[i] - ref.data[i]) < 1e-10);
    const auto p = maxpool1d_forward(x, ks, stride);
    CHECK(p.data == oracle::naive_pool(x, ks, stride).data);
  }
}

TEST_CASE("pooling hand trace") {
  Tensor2D x(4, 1);
  x.data = {1, 3, 2, 5};
  std::vector<std::size_t> arg;
  const auto y = maxpool1d_forward(x, 2, 1, &arg);
  CHECK(y.data == std::vector<double>{3, 3, 5, 5});
  CHECK(arg == std::vector<std::size_t>{1, 1, 3, 3});
  Tensor2D c(9, 2, 7.5);
  CHECK(maxpool1d_forward(c, 8, 1).data == Tensor2D(9, 2, 7.5).data);
  Tensor2D g(4, 1, 1.0);
  CHECK(maxpool1d_backward(g, arg, 4, 1).data == std::vector<double>{0, 2, 0, 2});
}

TEST_CASE("softmax stability and the extended-precision oracle") {
  for (double p : softmax(std::vector<double>{2, 2, 2, 2})) CHECK(p == doctest::Approx(0.25));
  const auto big = softmax(std::vector<double>{1000, 0, 0, 0});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(big[1]));
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto z = random_vec(rng, 4, 5.0);
    const auto p = softmax(z);
    long double denom = 0;
    for (double v : z) denom += std::exp(static_cast<long double>(v));
    double sum = 0;
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(p[j] - static_cast<double>(std::exp(static_cast<long double>(z[j])) / denom)) < 1e-12);
      sum += p[j];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy_loss(std::vector<double>{1, 0, 0, 0}, 0) == 0.0);
  CHECK(cross_entropy_loss(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2) == doctest::Approx(std::log(4.0)));
  CHECK(cross_entropy_loss(std::vector<double>{1, 0, 0, 0}, 1) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("dropout") {
  Rng rng(4);
  const auto x = oracle::random_tensor(rng, 100, 100);
  CHECK(apply_dropout(x, 0.5, false, &rng).data == x.data);
  CHECK(apply_dropout(x, 0.0, true, &rng).data == x.data);
  std::vector<double> mask;
  const auto y = apply_dropout(x, 0.5, true, &rng, &mask);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask[i] == 0.0) {
      ++zeros;
      CHECK(y.data[i] == 0.0);
    } else {
      CHECK(y.data[i] == 2.0 * x.data[i]);
    }
  }
  const double frac = static_cast<double>(zeros) / 10000.0;
  CHECK(frac >= 0.47);
  CHECK(frac <= 0.53);
}

TEST_CASE("layer strings round trip and shapes infer") {
  const auto spec = build_model("B");
  CHECK(parse_layers(to_string(spec)) == spec);
  CHECK(to_string(small_net()) == "conv4-3/1,maxpool2/1,dropout0.5,dense4,softmax");
  const auto shapes = infer_shapes(spec, {70, 5}, true);
  CHECK(shapes.back().length == 1);
  CHECK(shapes.back().channels == 4);
  CHECK_THROWS_AS(infer_shapes({LayerSpec::conv(3, 2), LayerSpec::dense(), LayerSpec::softmax()}, {70, 5}, true),
                  Error);
  CHECK_THROWS_AS(infer_shapes({LayerSpec::conv(4, 2)}, {70, 5}), Error);
  CHECK_THROWS_AS(parse_layers("conv4-x"), Error);
}

TEST_CASE("gradients of each layer kind match finite differences") {
  Rng rng(10);
  const std::vector<std::vector<LayerSpec>> nets{
      {LayerSpec::dense(), LayerSpec::softmax()},
      {LayerSpec::conv(4, 3), LayerSpec::dense(), LayerSpec::softmax()},
      {LayerSpec::conv(2, 3, 2), LayerSpec::dense(), LayerSpec::softmax()},
      {LayerSpec::conv(8, 2), LayerSpec::maxpool(4), LayerSpec::dense(), LayerSpec::softmax()},
      {LayerSpec::conv(4, 2), LayerSpec::maxpool(2, 2), LayerSpec::dense(), LayerSpec::softmax()},
      {LayerSpec::conv(4, 3), LayerSpec::dropout(0.5), LayerSpec::dense(), LayerSpec::softmax()},
  };
  for (std::size_t n = 0; n < nets.size(); ++n) {
    Network net(nets[n], {12, 3}, 100 + n);
    auto p = net.params();
    for (auto& v : p) v += 0.05 * standard_normal(rng);  // non-zero biases
    std::vector<Tensor2D> batch;
    for (int s = 0; s < 4; ++s) batch.push_back(oracle::random_tensor(rng, 12, 3));
    const auto r = oracle::check_network_gradient(net, batch, {0, 1, 2, 3}, true, 55);
    INFO("net " << to_string(nets[n]) << " worst " << r.worst_index);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("input gradients of conv and pool match finite differences") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 5 + uniform_index(rng, 10), cin = 2, cout = 3;
    const std::size_t ks = std::size_t{2} << uniform_index(rng, 3), st = 1 + uniform_index(rng, 2);
    auto x = oracle::random_tensor(rng, len, cin);
    const auto k = random_vec(rng, ks * cin * cout), b = random_vec(rng, cout);
    Tensor2D pre;
    const auto y = conv1d_forward(x, k, b, ks, st, 0.01, &pre);
    const auto gout = oracle::random_tensor(rng, y.length, cout);
    std::vector<double> gk(k.size()), gb(b.size());
    const auto dx = conv1d_backward(x, k, pre, gout, ks, st, 0.01, gk, gb);
    auto objective = [&](const Tensor2D& in) {
      const auto o = conv1d_forward(in, k, b, ks, st, 0.01);
      double s = 0;
      for (std::size_t i = 0; i < o.size(); ++i) s += o.data[i] * gout.data[i];
      return s;
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = x.data[i];
      x.data[i] = w + 1e-5;
      const double up = objective(x);
      x.data[i] = w - 1e-5;
      const double down = objective(x);
      x.data[i] = w;
      CHECK(oracle::rel_error(dx.data[i], (up - down) / 2e-5) < 1e-4);
    }
  }
}

TEST_CASE("zero input gives zero conv kernel gradients") {
  Network net({LayerSpec::conv(4, 3), LayerSpec::maxpool(2), LayerSpec::dense(), LayerSpec::softmax()}, {10, 5}, 3);
  Tensor2D zero(10, 5);
  std::vector<const Tensor2D*> batch{&zero};
  std::vector<double> grad(net.num_params());
  net.loss_and_gradient(batch, std::vector<int>{1}, grad, false, nullptr);
  const auto w = net.layer_weights(0);
  const auto off = static_cast<std::size_t>(w.data() - net.params().data());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(grad[off + i] == 0.0);
}

TEST_CASE("a duplicated sample has the single-sample gradient") {
  Rng rng(6);
  Network net(small_net(), {12, 5}, 8);
  const auto x = oracle::random_tensor(rng, 12, 5);
  std::vector<double> g1(net.num_params()), g2(net.num_params());
  std::vector<const Tensor2D*> one{&x}, two{&x, &x};
  net.loss_and_gradient(one, std::vector<int>{2}, g1, false, nullptr);
  net.loss_and_gradient(two, std::vector<int>{2, 2}, g2, false, nullptr);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-12));
}

TEST_CASE("Adam first step and zero gradients") {
  std::vector<double> w{1.0};
  AdamState st(1, 1e-4);
  adam_step(w, std::vector<double>{2.0}, st);
  CHECK(w[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-9));
  std::vector<double> z{0.5, -0.5};
  AdamState s2(2);
  for (int i = 0; i < 50; ++i) adam_step(z, std::vector<double>{0.0, 0.0}, s2);
  CHECK(z == std::vector<double>{0.5, -0.5});
}

TEST_CASE("He-normal initialization scale") {
  Network net({LayerSpec::conv(8, 64), LayerSpec::dense(), LayerSpec::softmax()}, {70, 5}, 1);
  const auto w = net.layer_weights(0);
  double ss = 0;
  for (double v : w) ss += v * v;
  CHECK(std::sqrt(ss / static_cast<double>(w.size())) == doctest::Approx(std::sqrt(2.0 / 40.0)).epsilon(0.05));
  for (double b : net.layer_bias(0)) CHECK(b == 0.0);
}

TEST_CASE("training separates a toy problem and replays exactly") {
  const auto train_set = toy_set(512, 1), valid_set = toy_set(64, 2);
  const std::vector<LayerSpec> spec{LayerSpec::conv(4, 4), LayerSpec::maxpool(2), LayerSpec::dropout(0.5),
                                    LayerSpec::dense(), LayerSpec::softmax()};
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.patience = 20;
  cfg.seed = 9;
  Network a(spec, {16, 2}, 4), b(spec, {16, 2}, 4);
  const auto ha = train(a, train_set, valid_set, cfg);
  const auto hb = train(b, train_set, valid_set, cfg);
  CHECK(accuracy(a, train_set) >= 0.99);
  REQUIRE(ha.epochs.size() == hb.epochs.size());
  for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
    CHECK(ha.epochs[i].train_loss == hb.epochs[i].train_loss);
    CHECK(ha.epochs[i].valid_accuracy == hb.epochs[i].valid_accuracy);
  }
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
}

TEST_CASE("full-batch loss does not increase over the first steps") {
  const auto set = toy_set(32, 3);
  Network net({LayerSpec::conv(4, 4), LayerSpec::maxpool(2), LayerSpec::dense(), LayerSpec::softmax()}, {16, 2}, 5);
  std::vector<const Tensor2D*> batch;
  for (const auto& t : set.inputs) batch.push_back(&t);
  std::vector<double> grad(net.num_params());
  AdamState st(net.num_params(), 1e-4);
  double prev = INFINITY;
  for (int i = 0; i < 10; ++i) {
    const double loss = net.loss_and_gradient(batch, set.labels, grad, false, nullptr);
    CHECK(loss <= prev);
    prev = loss;
    adam_step(net.params(), grad, st);
  }
}

TEST_CASE("early stopping with patience 0 stops at the first non-improvement") {
  // Constant inputs: validation accuracy can never improve after epoch 1.
  LabeledSet s;
  for (int i = 0; i < 8; ++i) {
    s.inputs.emplace_back(8, 1, 1.0);
    s.labels.push_back(i % 2);
  }
  Network net({LayerSpec::conv(2, 1), LayerSpec::dense(), LayerSpec::softmax()}, {8, 1}, 2);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.patience = 0;
  const auto h = train(net, s, s, cfg);
  CHECK(h.stopped_early);
  CHECK(h.epochs.size() == 2);
  CHECK(h.best_epoch == 1);
}

TEST_CASE("divergence is reported") {
  LabeledSet s;
  Tensor2D x(8, 1, std::nan(""));
  s.inputs = {x, x};
  s.labels = {0, 1};
  Network net({LayerSpec::conv(2, 2), LayerSpec::dense(), LayerSpec::softmax()}, {8, 1}, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  try {
    train(net, s, s, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::diverged);
  }
}

TEST_CASE("MNET round trip") {
  ModelFile m;
  m.network = Network(build_model("A"), {70, 5}, 77);
  m.normalizer = {{1, 2, 3, 4, 5}, {0.5, 1, 2, 4, 8}};
  m.train_seed = 1234;
  m.name = "A";
  std::stringstream ss;
  write_model(ss, m);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "MNET");
  CHECK(bytes[4] == 1);
  const auto r = read_model(ss);
  CHECK(r.name == "A");
  CHECK(r.train_seed == 1234);
  CHECK(r.network.layers() == m.network.layers());
  CHECK(std::equal(r.network.params().begin(), r.network.params().end(), m.network.params().begin()));
  CHECK(r.normalizer.stddev == m.normalizer.stddev);
  std::stringstream again;
  write_model(again, r);
  CHECK(again.str() == bytes);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_model(truncated), Error);
}
