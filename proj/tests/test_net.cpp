/* Copyright 2026 The volseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "oracles.hpp"
#include "volseg/losses.hpp"
#include "volseg/net.hpp"

using namespace volseg;

TEST_CASE("zeroed net outputs probability one half") {
  TinyConvNet net = TinyConvNet::init(4, 1);
  for (auto& k : net.conv1_w) k.w.fill(0.0);
  for (auto& k : net.conv2_w) k.w.fill(0.0);
  net.conv1_b.assign(4, 0.0);
  net.conv2_b = 0.0;  // init uses a background-prior bias; zero it here
  SplitMix64 rng(2);
  const Volume image = oracle::random_volume({6, 6, 6}, rng);
  const Volume prob = net_forward(net, image);
  for (double p : prob.data) CHECK(p == 0.5);
}

TEST_CASE("doubling the head weights doubles the logits") {
  SplitMix64 rng(3);
  TinyConvNet net = TinyConvNet::init(4, 17);
  net.conv1_b.assign(4, 0.1);
  net.conv2_b = 0.0;
  const Volume image = oracle::random_volume({6, 6, 6}, rng, 0.0, 1.0);

  const Volume p1 = net_forward(net, image);
  TinyConvNet doubled = net;
  for (auto& k : doubled.conv2_w)
    for (double& w : k.w) w *= 2.0;
  const Volume p2 = net_forward(doubled, image);

  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double logit1 = std::log(p1.data[i] / (1.0 - p1.data[i]));
    const double logit2 = std::log(p2.data[i] / (1.0 - p2.data[i]));
    CHECK(logit2 == doctest::Approx(2.0 * logit1).epsilon(1e-9));
  }
}

TEST_CASE("forward matches the naive layer-by-layer oracle") {
  SplitMix64 rng(5);
  const TinyConvNet net = TinyConvNet::init(3, 23);
  const Volume image = oracle::random_volume({8, 8, 8}, rng);
  const Volume fast = net_forward(net, image);
  const Volume slow = oracle::net_forward(net, image);
  for (std::size_t i = 0; i < fast.size(); ++i) {
    CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  SplitMix64 rng(7);
  const TinyConvNet net = TinyConvNet::init(3, 29);
  const Volume image = oracle::random_volume({6, 6, 6}, rng);
  ForwardCache cache;
  net_forward(net, image, &cache);
  const Volume zero_grad = Volume::create({6, 6, 6}, {1, 1, 1}, 0.0);
  const NetGradients g = net_backward(net, cache, zero_grad);
  for (const auto& k : g.conv1_w)
    for (double w : k.w) CHECK(w == 0.0);
  for (double b : g.conv1_b) CHECK(b == 0.0);
  for (const auto& k : g.conv2_w)
    for (double w : k.w) CHECK(w == 0.0);
  CHECK(g.conv2_b == 0.0);
}

TEST_CASE("a dead channel receives no first-layer gradient") {
  SplitMix64 rng(11);
  TinyConvNet net = TinyConvNet::init(2, 31);
  net.conv1_b[0] = -100.0;  // every pre-activation negative
  const Volume image = oracle::random_volume({6, 6, 6}, rng, 0.0, 1.0);
  ForwardCache cache;
  const Volume prob = net_forward(net, image, &cache);
  Volume grad = Volume::create({6, 6, 6}, {1, 1, 1}, 1.0);
  const NetGradients g = net_backward(net, cache, grad);
  for (double w : g.conv1_w[0].w) CHECK(w == 0.0);
  CHECK(g.conv1_b[0] == 0.0);
  // the live channel does learn
  double live = 0.0;
  for (double w : g.conv1_w[1].w) live += std::fabs(w);
  CHECK(live > 0.0);
  (void)prob;
}

TEST_CASE("backward matches finite differences through a dice loss") {
  SplitMix64 rng(13);
  const Dims3 dims{7, 7, 7};
  const TinyConvNet net = TinyConvNet::init(3, 37);
  const Volume image = oracle::random_volume(dims, rng, 0.0, 1.0);
  const BinaryMask target = oracle::random_mask(dims, rng, 0.4);

  ForwardCache cache;
  const Volume prob = net_forward(net, image, &cache);
  const LossResult base = soft_dice(prob, target);
  const NetGradients grads = net_backward(net, cache, base.grad);

  std::vector<double> flat = flatten_params(net);
  const std::vector<double> analytic = flatten_grads(grads);
  REQUIRE(flat.size() == analytic.size());

  SplitMix64 pick(17);
  const double step = 1e-5;
  for (int s = 0; s < 25; ++s) {
    const std::size_t i = pick.next_below(flat.size());
    TinyConvNet probe = net;
    const double saved = flat[i];

    flat[i] = saved + step;
    unflatten_params(probe, flat);
    const double up = soft_dice(net_forward(probe, image), target).value;
    flat[i] = saved - step;
    unflatten_params(probe, flat);
    const double down = soft_dice(net_forward(probe, image), target).value;
    flat[i] = saved;

    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
    CHECK(std::fabs(fd - analytic[i]) / denom <= 1e-4);
  }
}

TEST_CASE("backward rejects a missing cache") {
  const TinyConvNet net = TinyConvNet::init(2, 41);
  ForwardCache cache;  // never filled
  const Volume g = Volume::create({4, 4, 4}, {1, 1, 1}, 0.0);
  CHECK_THROWS_AS(net_backward(net, cache, g), std::invalid_argument);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  AdamState adam(5, AdamConfig{});
  std::vector<double> params{1, 2, 3, 4, 5};
  const std::vector<double> before = params;
  const std::vector<double> zeros(5, 0.0);
  adam.step(params, zeros);
  CHECK(params == before);
}

TEST_CASE("adam: first step moves by about lr times the gradient sign") {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  AdamState adam(3, cfg);
  std::vector<double> params{0.0, 0.0, 0.0};
  const std::vector<double> grads{0.5, -2.0, 1e-3};
  adam.step(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double expected = -cfg.lr * (grads[i] > 0 ? 1.0 : -1.0);
    CHECK(params[i] == doctest::Approx(expected).epsilon(1e-4));
  }
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam converges on a quadratic") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.beta1 = 0.9;  // short horizon suffices for a clean quadratic
  AdamState adam(1, cfg);
  std::vector<double> x{0.0};
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g{2.0 * (x[0] - 3.0)};
    adam.step(x, g);
  }
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("adam trajectories are bitwise reproducible") {
  auto run = [] {
    AdamState adam(4, AdamConfig{});
    std::vector<double> p{0.1, -0.2, 0.3, -0.4};
    SplitMix64 rng(55);
    for (int i = 0; i < 50; ++i) {
      std::vector<double> g(4);
      for (double& x : g) x = rng.next_uniform(-1, 1);
      adam.step(p, g);
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects shape mismatch") {
  AdamState adam(3, AdamConfig{});
  std::vector<double> p{1, 2, 3};
  std::vector<double> g{1, 2};
  CHECK_THROWS_AS(adam.step(p, g), std::invalid_argument);
}

TEST_CASE("flatten/unflatten round trip") {
  TinyConvNet net = TinyConvNet::init(5, 61);
  net.conv2_b = 0.25;
  const std::vector<double> flat = flatten_params(net);
  CHECK(flat.size() == net.param_count());
  TinyConvNet other = TinyConvNet::init(5, 62);
  unflatten_params(other, flat);
  CHECK(flatten_params(other) == flat);
}
