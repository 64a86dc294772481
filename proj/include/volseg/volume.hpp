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

#include <array>
#include <cstddef>
#include <vector>

namespace volseg {

using Dims3 = std::array<int, 3>;
using Spacing3 = std::array<double, 3>;

/// Dense 3D scalar field with voxel spacing in millimeters.
///
/// Storage is a flat array in x-fastest order:
///   index(x, y, z) = x + nx * (y + ny * z).
/// That convention is shared by the file format and the convolution engine
/// and must not change. All public operations treat volumes as values:
/// inputs are never modified.
struct Volume {
  Dims3 dims{0, 0, 0};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::vector<double> data;

  /// Throws std::invalid_argument on non-positive dims/spacing or a
  /// non-finite fill value.
  static Volume create(const Dims3& dims, const Spacing3& spacing,
                       double fill);

  int nx() const { return dims[0]; }
  int ny() const { return dims[1]; }
  int nz() const { return dims[2]; }
  std::size_t size() const { return data.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }

  double at(int x, int y, int z) const { return data[index(x, y, z)]; }
  double& at(int x, int y, int z) { return data[index(x, y, z)]; }

  bool in_range(int x, int y, int z) const {
    return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 &&
           z < dims[2];
  }

  bool same_dims(const Volume& other) const { return dims == other.dims; }
};

/// A volume whose voxels are all exactly 0.0 or 1.0. The constructor
/// validates; anything else throws std::invalid_argument.
class BinaryMask {
 public:
  explicit BinaryMask(Volume v);

  const Volume& volume() const { return vol_; }
  const Dims3& dims() const { return vol_.dims; }
  std::size_t foreground_count() const;

 private:
  Volume vol_;
};

/// 3x3x3 stencil weights, indexed by offsets in {-1,0,1}^3.
/// Linear tap index = (dx+1) + 3*(dy+1) + 9*(dz+1); convolutions accumulate
/// taps in ascending linear index.
struct Kernel3 {
  std::array<double, 27> w{};

  static constexpr int index(int dx, int dy, int dz) {
    return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1);
  }
  double at(int dx, int dy, int dz) const { return w[index(dx, dy, dz)]; }
  double& at(int dx, int dy, int dz) { return w[index(dx, dy, dz)]; }
};

/// a*x + y elementwise; dims and spacing taken from x. Throws on dim
/// mismatch.
Volume axpy(double a, const Volume& x, const Volume& y);

/// sqrt of the sum of squared voxels.
double l2_norm(const Volume& v);

/// Sum over voxels of a*b. Throws on dim mismatch.
double dot(const Volume& a, const Volume& b);

/// 1.0 where v >= t, else 0.0. A voxel exactly at t counts as foreground.
BinaryMask threshold(const Volume& v, double t);

/// Throws std::invalid_argument if any voxel is NaN or infinite.
void require_finite(const Volume& v, const char* what);

}  // namespace volseg
