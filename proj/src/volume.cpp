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
#include "volseg/volume.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "volseg/kernels.hpp"

namespace volseg {

Volume Volume::create(const Dims3& dims, const Spacing3& spacing,
                      double fill) {
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("Volume::create: dims must be >= 1");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("Volume::create: spacing must be > 0");
    }
  }
  if (!std::isfinite(fill)) {
    throw std::invalid_argument("Volume::create: fill must be finite");
  }
  Volume v;
  v.dims = dims;
  v.spacing = spacing;
  v.data.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], fill);
  return v;
}

BinaryMask::BinaryMask(Volume v) : vol_(std::move(v)) {
  for (double x : vol_.data) {
    if (x != 0.0 && x != 1.0) {
      throw std::invalid_argument("BinaryMask: voxel not in {0,1}");
    }
  }
}

std::size_t BinaryMask::foreground_count() const {
  std::size_t n = 0;
  for (double x : vol_.data) n += (x == 1.0);
  return n;
}

Volume axpy(double a, const Volume& x, const Volume& y) {
  if (!x.same_dims(y)) throw std::invalid_argument("axpy: dims mismatch");
  Volume out = x;
  kernels::ops().axpy(a, x.data.data(), y.data.data(), out.data.data(),
                      x.size());
  return out;
}

double l2_norm(const Volume& v) {
  return std::sqrt(kernels::ops().sum_sq(v.data.data(), v.size()));
}

double dot(const Volume& a, const Volume& b) {
  if (!a.same_dims(b)) throw std::invalid_argument("dot: dims mismatch");
  return kernels::ops().dot(a.data.data(), b.data.data(), a.size());
}

BinaryMask threshold(const Volume& v, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("threshold: t not finite");
  Volume out = v;
  for (double& x : out.data) x = (x >= t) ? 1.0 : 0.0;
  return BinaryMask(std::move(out));
}

void require_finite(const Volume& v, const char* what) {
  for (double x : v.data) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) +
                                  ": non-finite voxel value");
    }
  }
}

}  // namespace volseg
