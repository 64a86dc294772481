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
#pragma once

#include <cstdint>
#include <vector>

#include "volseg/volume.hpp"

namespace volseg {

/// Two 3x3x3 convolution layers with a rectifier in between and a logistic
/// head: image -> C hidden channels -> logit -> probability. Same-size
/// zero-padded convolutions, stride 1. Small on purpose; the losses carry
/// the experiment, not the model.
struct TinyConvNet {
  int hidden_channels = 8;
  std::vector<Kernel3> conv1_w;  ///< one kernel per hidden channel
  std::vector<double> conv1_b;   ///< per-channel bias
  std::vector<Kernel3> conv2_w;  ///< hidden channel -> logit
  double conv2_b = 0.0;

  /// Seeded uniform init, biases zero. Deterministic in (channels, seed).
  static TinyConvNet init(int channels, std::uint64_t seed);

  std::size_t param_count() const;
};

/// Intermediates kept for the backward pass.
struct ForwardCache {
  Volume input;
  std::vector<Volume> pre_act;  ///< conv1 outputs before the rectifier
  std::vector<Volume> act;      ///< rectified activations
  Volume prob;
  bool valid = false;
};

/// Probability volume in (0,1), same dims as the image. Fills *cache when
/// given one.
Volume net_forward(const TinyConvNet& net, const Volume& image,
                   ForwardCache* cache = nullptr);

struct NetGradients {
  std::vector<Kernel3> conv1_w;
  std::vector<double> conv1_b;
  std::vector<Kernel3> conv2_w;
  double conv2_b = 0.0;
};

/// Backpropagates d(loss)/d(prob) to every parameter. Throws if the cache
/// is missing, from a different configuration, or dims do not match.
NetGradients net_backward(const TinyConvNet& net, const ForwardCache& cache,
                          const Volume& grad_prob);

/// Parameter packing order (shared by gradients): conv1 kernels in channel
/// then tap order, conv1 biases, conv2 kernels, conv2 bias.
std::vector<double> flatten_params(const TinyConvNet& net);
void unflatten_params(TinyConvNet& net, const std::vector<double>& flat);
std::vector<double> flatten_grads(const NetGradients& g);

struct AdamConfig {
  double lr = 1e-3;
  // Long momentum horizon: the boundary loss has a scale-free gradient
  // whose high-frequency jitter needs heavier averaging than the usual 0.9
  // before the overlap term's small persistent signal comes through.
  double beta1 = 0.99;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a flat parameter vector.
class AdamState {
 public:
  AdamState(std::size_t n, AdamConfig cfg);

  /// One update, in place. Throws on shape mismatch.
  void step(std::vector<double>& params, const std::vector<double>& grads);

  long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace volseg
