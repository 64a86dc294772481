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
#include "volseg/net.hpp"

#include <cmath>
#include <stdexcept>

#include "volseg/filtering.hpp"
#include "volseg/kernels.hpp"
#include "volseg/rng.hpp"

namespace volseg {

namespace {

Kernel3 flipped(const Kernel3& k) {
  Kernel3 out;
  for (int i = 0; i < 27; ++i) out.w[i] = k.w[26 - i];
  return out;
}

// dW[o] = sum_v g(v) * in(v + o) over the in-range overlap, one tap at a
// time; rows are reduced with the dispatched dot kernel and folded in scan
// order, so the result does not depend on the backend.
Kernel3 weight_gradient(const Volume& in, const Volume& g) {
  Kernel3 dw;
  const int nx = in.nx(), ny = in.ny(), nz = in.nz();
  const auto& kops = kernels::ops();
  for (int kk = 0; kk < 27; ++kk) {
    const int dx = kk % 3 - 1;
    const int dy = (kk / 3) % 3 - 1;
    const int dz = kk / 9 - 1;
    const int x0 = std::max(0, -dx), x1 = std::min(nx - 1, nx - 1 - dx);
    const int y0 = std::max(0, -dy), y1 = std::min(ny - 1, ny - 1 - dy);
    const int z0 = std::max(0, -dz), z1 = std::min(nz - 1, nz - 1 - dz);
    if (x0 > x1 || y0 > y1 || z0 > z1) continue;
    const std::size_t len = static_cast<std::size_t>(x1 - x0 + 1);
    double acc = 0.0;
    for (int z = z0; z <= z1; ++z) {
      for (int y = y0; y <= y1; ++y) {
        acc += kops.dot(g.data.data() + g.index(x0, y, z),
                        in.data.data() + in.index(x0 + dx, y + dy, z + dz),
                        len);
      }
    }
    dw.w[kk] = acc;
  }
  return dw;
}

}  // namespace

TinyConvNet TinyConvNet::init(int channels, std::uint64_t seed) {
  if (channels < 1) throw std::invalid_argument("TinyConvNet: channels < 1");
  TinyConvNet net;
  net.hidden_channels = channels;
  SplitMix64 rng(seed);
  const double b1 = 1.0 / std::sqrt(27.0);
  const double b2 = 1.0 / std::sqrt(27.0 * static_cast<double>(channels));
  net.conv1_w.resize(channels);
  net.conv1_b.assign(channels, 0.0);
  net.conv2_w.resize(channels);
  for (int c = 0; c < channels; ++c) {
    for (double& w : net.conv1_w[c].w) w = rng.next_uniform(-b1, b1);
  }
  for (int c = 0; c < channels; ++c) {
    for (double& w : net.conv2_w[c].w) w = rng.next_uniform(-b2, b2);
  }
  // Background-prior head bias: start near p ~ 0.05 instead of 0.5. A flat
  // half probability field carries a large zero-pad border response through
  // the boundary filter, and its cheapest descent direction saturates the
  // logistic; starting near the background rate avoids that trap.
  net.conv2_b = -3.0;
  return net;
}

std::size_t TinyConvNet::param_count() const {
  const std::size_t c = static_cast<std::size_t>(hidden_channels);
  return c * 27 + c + c * 27 + 1;
}

Volume net_forward(const TinyConvNet& net, const Volume& image,
                   ForwardCache* cache) {
  const int C = net.hidden_channels;
  if (static_cast<int>(net.conv1_w.size()) != C ||
      static_cast<int>(net.conv2_w.size()) != C ||
      static_cast<int>(net.conv1_b.size()) != C) {
    throw std::invalid_argument("net_forward: inconsistent net shape");
  }
  std::vector<Volume> pre(C), act(C);
  Volume logit = Volume::create(image.dims, image.spacing, net.conv2_b);
  const auto& kops = kernels::ops();
  for (int c = 0; c < C; ++c) {
    Volume h = convolve3(image, net.conv1_w[c], PaddingMode::ZeroPad);
    const double bias = net.conv1_b[c];
    for (double& v : h.data) v += bias;
    Volume a = h;
    for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    Volume part = convolve3(a, net.conv2_w[c], PaddingMode::ZeroPad);
    kops.axpy(1.0, part.data.data(), logit.data.data(), logit.data.data(),
              logit.size());
    pre[c] = std::move(h);
    act[c] = std::move(a);
  }
  Volume prob = logit;
  for (double& v : prob.data) v = 1.0 / (1.0 + std::exp(-v));
  if (cache) {
    cache->input = image;
    cache->pre_act = std::move(pre);
    cache->act = std::move(act);
    cache->prob = prob;
    cache->valid = true;
  }
  return prob;
}

NetGradients net_backward(const TinyConvNet& net, const ForwardCache& cache,
                          const Volume& grad_prob) {
  const int C = net.hidden_channels;
  if (!cache.valid || static_cast<int>(cache.act.size()) != C ||
      static_cast<int>(cache.pre_act.size()) != C) {
    throw std::invalid_argument("net_backward: cache missing or mismatched");
  }
  if (!grad_prob.same_dims(cache.prob)) {
    throw std::invalid_argument("net_backward: grad dims mismatch");
  }

  const auto& kops = kernels::ops();
  const std::size_t n = grad_prob.size();

  // logistic: dprob/dlogit = p (1 - p)
  Volume dlogit = grad_prob;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = cache.prob.data[i];
    dlogit.data[i] = grad_prob.data[i] * p * (1.0 - p);
  }

  NetGradients g;
  g.conv1_w.resize(C);
  g.conv1_b.assign(C, 0.0);
  g.conv2_w.resize(C);
  g.conv2_b = kops.sum(dlogit.data.data(), n);

  for (int c = 0; c < C; ++c) {
    g.conv2_w[c] = weight_gradient(cache.act[c], dlogit);
    // rectifier gate: derivative 0 at and below zero pre-activation
    Volume dh = convolve3(dlogit, flipped(net.conv2_w[c]), PaddingMode::ZeroPad);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(cache.pre_act[c].data[i] > 0.0)) dh.data[i] = 0.0;
    }
    g.conv1_b[c] = kops.sum(dh.data.data(), n);
    g.conv1_w[c] = weight_gradient(cache.input, dh);
  }
  return g;
}

std::vector<double> flatten_params(const TinyConvNet& net) {
  std::vector<double> flat;
  flat.reserve(net.param_count());
  for (const auto& k : net.conv1_w) flat.insert(flat.end(), k.w.begin(), k.w.end());
  flat.insert(flat.end(), net.conv1_b.begin(), net.conv1_b.end());
  for (const auto& k : net.conv2_w) flat.insert(flat.end(), k.w.begin(), k.w.end());
  flat.push_back(net.conv2_b);
  return flat;
}

void unflatten_params(TinyConvNet& net, const std::vector<double>& flat) {
  if (flat.size() != net.param_count()) {
    throw std::invalid_argument("unflatten_params: size mismatch");
  }
  std::size_t i = 0;
  for (auto& k : net.conv1_w)
    for (double& w : k.w) w = flat[i++];
  for (double& b : net.conv1_b) b = flat[i++];
  for (auto& k : net.conv2_w)
    for (double& w : k.w) w = flat[i++];
  net.conv2_b = flat[i++];
}

std::vector<double> flatten_grads(const NetGradients& g) {
  std::vector<double> flat;
  for (const auto& k : g.conv1_w) flat.insert(flat.end(), k.w.begin(), k.w.end());
  flat.insert(flat.end(), g.conv1_b.begin(), g.conv1_b.end());
  for (const auto& k : g.conv2_w) flat.insert(flat.end(), k.w.begin(), k.w.end());
  flat.push_back(g.conv2_b);
  return flat;
}

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::step(std::vector<double>& params,
                     const std::vector<double>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("AdamState::step: shape mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * gi;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * gi * gi;
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

}  // namespace volseg
