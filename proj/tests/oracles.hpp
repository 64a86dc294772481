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

// Brute-force reference implementations the fast paths are tested against.
// Everything here is deliberately naive and kept independent of the engine
// code in src/: triple loops, all-pairs scans, no shared helpers.

#include <cmath>
#include <limits>
#include <vector>

#include "volseg/net.hpp"
#include "volseg/rng.hpp"
#include "volseg/volume.hpp"

namespace volseg::oracle {

// Same-size zero-padded 3x3x3 convolution, one voxel at a time, taps in
// ascending linear tap index (the documented accumulation order).
inline Volume convolve3(const Volume& v, const Kernel3& k) {
  Volume out = Volume::create(v.dims, v.spacing, 0.0);
  for (int z = 0; z < v.nz(); ++z) {
    for (int y = 0; y < v.ny(); ++y) {
      for (int x = 0; x < v.nx(); ++x) {
        double acc = 0.0;
        for (int kk = 0; kk < 27; ++kk) {
          const int dx = kk % 3 - 1;
          const int dy = (kk / 3) % 3 - 1;
          const int dz = kk / 9 - 1;
          const int sx = x + dx, sy = y + dy, sz = z + dz;
          if (sx < 0 || sx >= v.nx() || sy < 0 || sy >= v.ny() || sz < 0 ||
              sz >= v.nz()) {
            continue;
          }
          acc += k.w[kk] * v.at(sx, sy, sz);
        }
        out.at(x, y, z) = acc;
      }
    }
  }
  return out;
}

// All-pairs Euclidean distance transform (squared sums associated per axis
// in x, y, z order to mirror the separable passes).
inline Volume edt(const BinaryMask& mask) {
  const Volume& m = mask.volume();
  std::vector<std::array<int, 3>> fg;
  for (int z = 0; z < m.nz(); ++z)
    for (int y = 0; y < m.ny(); ++y)
      for (int x = 0; x < m.nx(); ++x)
        if (m.at(x, y, z) == 1.0) fg.push_back({x, y, z});

  const double sx2 = m.spacing[0] * m.spacing[0];
  const double sy2 = m.spacing[1] * m.spacing[1];
  const double sz2 = m.spacing[2] * m.spacing[2];
  Volume out = Volume::create(m.dims, m.spacing, 0.0);
  for (int z = 0; z < m.nz(); ++z) {
    for (int y = 0; y < m.ny(); ++y) {
      for (int x = 0; x < m.nx(); ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : fg) {
          const double dx = static_cast<double>(x - p[0]);
          const double dy = static_cast<double>(y - p[1]);
          const double dz = static_cast<double>(z - p[2]);
          const double d2 = (sx2 * dx * dx + sy2 * dy * dy) + sz2 * dz * dz;
          if (d2 < best) best = d2;
        }
        out.at(x, y, z) = std::sqrt(best);
      }
    }
  }
  return out;
}

// Layer-by-layer net forward with plain nested loops.
inline Volume net_forward(const TinyConvNet& net, const Volume& image) {
  const int nx = image.nx(), ny = image.ny(), nz = image.nz();
  auto conv_at = [&](const Volume& in, const Kernel3& k, int x, int y,
                     int z) {
    double acc = 0.0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = x + dx, sy = y + dy, sz = z + dz;
          if (sx < 0 || sx >= nx || sy < 0 || sy >= ny || sz < 0 || sz >= nz)
            continue;
          acc += k.at(dx, dy, dz) * in.at(sx, sy, sz);
        }
    return acc;
  };

  std::vector<Volume> act;
  for (int c = 0; c < net.hidden_channels; ++c) {
    Volume a = Volume::create(image.dims, image.spacing, 0.0);
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          const double h = conv_at(image, net.conv1_w[c], x, y, z) + net.conv1_b[c];
          a.at(x, y, z) = h > 0.0 ? h : 0.0;
        }
    act.push_back(std::move(a));
  }
  Volume prob = Volume::create(image.dims, image.spacing, 0.0);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        double logit = net.conv2_b;
        for (int c = 0; c < net.hidden_channels; ++c) {
          logit += conv_at(act[c], net.conv2_w[c], x, y, z);
        }
        prob.at(x, y, z) = 1.0 / (1.0 + std::exp(-logit));
      }
  return prob;
}

inline Volume random_volume(const Dims3& dims, SplitMix64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Volume v = Volume::create(dims, {1.0, 1.0, 1.0}, 0.0);
  for (double& x : v.data) x = rng.next_uniform(lo, hi);
  return v;
}

inline BinaryMask random_mask(const Dims3& dims, SplitMix64& rng,
                              double fg_prob = 0.5) {
  Volume v = Volume::create(dims, {1.0, 1.0, 1.0}, 0.0);
  for (double& x : v.data) x = rng.next_double() < fg_prob ? 1.0 : 0.0;
  return BinaryMask(std::move(v));
}

inline Kernel3 random_kernel(SplitMix64& rng) {
  Kernel3 k;
  for (double& w : k.w) w = rng.next_uniform(-1.0, 1.0);
  return k;
}

}  // namespace volseg::oracle
