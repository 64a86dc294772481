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
#include "volseg/filtering.hpp"

#include "volseg/kernels.hpp"

namespace volseg {

Kernel3 box_kernel() {
  Kernel3 k;
  for (double& w : k.w) w = 1.0 / 27.0;
  return k;
}

Kernel3 laplacian_kernel() {
  Kernel3 k;
  k.at(0, 0, 0) = -6.0;
  k.at(-1, 0, 0) = 1.0;
  k.at(1, 0, 0) = 1.0;
  k.at(0, -1, 0) = 1.0;
  k.at(0, 1, 0) = 1.0;
  k.at(0, 0, -1) = 1.0;
  k.at(0, 0, 1) = 1.0;
  return k;
}

namespace {

// Generic per-voxel accumulation, taps ascending, out-of-range taps skipped.
// Used for border voxels and degenerate dims; the interior goes through the
// dispatched row kernel, which runs the same per-voxel tap order.
double convolve_at(const Volume& v, const Kernel3& k, int x, int y, int z) {
  double acc = 0.0;
  for (int kk = 0; kk < 27; ++kk) {
    const int dx = kk % 3 - 1;
    const int dy = (kk / 3) % 3 - 1;
    const int dz = kk / 9 - 1;
    const int sx = x + dx, sy = y + dy, sz = z + dz;
    if (v.in_range(sx, sy, sz)) acc += k.w[kk] * v.at(sx, sy, sz);
  }
  return acc;
}

}  // namespace

Volume convolve3(const Volume& v, const Kernel3& k, PaddingMode /*pad*/) {
  Volume out = Volume::create(v.dims, v.spacing, 0.0);
  const int nx = v.nx(), ny = v.ny(), nz = v.nz();
  const auto& kops = kernels::ops();

  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      const bool interior_row =
          z >= 1 && z < nz - 1 && y >= 1 && y < ny - 1 && nx >= 3;
      if (interior_row) {
        // x in [1, nx-2]: every tap is in range.
        const double* tap[27];
        for (int kk = 0; kk < 27; ++kk) {
          const int dx = kk % 3 - 1;
          const int dy = (kk / 3) % 3 - 1;
          const int dz = kk / 9 - 1;
          tap[kk] = v.data.data() + v.index(1 + dx, y + dy, z + dz);
        }
        kops.stencil27(k.w.data(), tap, out.data.data() + out.index(1, y, z),
                       static_cast<std::size_t>(nx - 2));
        out.at(0, y, z) = convolve_at(v, k, 0, y, z);
        out.at(nx - 1, y, z) = convolve_at(v, k, nx - 1, y, z);
      } else {
        for (int x = 0; x < nx; ++x) {
          out.at(x, y, z) = convolve_at(v, k, x, y, z);
        }
      }
    }
  }
  return out;
}

BeFilter BeFilter::standard() {
  return BeFilter{box_kernel(), volseg::laplacian_kernel(), 3};
}

namespace {

// Dedicated 7-point Laplacian stage. Face pairs are summed per axis, the
// axis sums are folded left to right, and 6*center is subtracted last:
//   ((sx + sy) + sz) - 6*c.
// On a constant neighborhood sx+sy = 4c and +sz rounds to fl(6c), the same
// rounding the product 6*c gets, so the difference is exactly 0.0.
Volume laplacian_stencil(const Volume& v) {
  Volume out = Volume::create(v.dims, v.spacing, 0.0);
  const int nx = v.nx(), ny = v.ny(), nz = v.nz();
  auto fetch = [&](int x, int y, int z) -> double {
    return v.in_range(x, y, z) ? v.at(x, y, z) : 0.0;
  };
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        const double sx = fetch(x - 1, y, z) + fetch(x + 1, y, z);
        const double sy = fetch(x, y - 1, z) + fetch(x, y + 1, z);
        const double sz = fetch(x, y, z - 1) + fetch(x, y, z + 1);
        out.at(x, y, z) = ((sx + sy) + sz) - 6.0 * v.at(x, y, z);
      }
    }
  }
  return out;
}

}  // namespace

Volume be_filter_apply(const BeFilter& f, const Volume& v) {
  Volume t = v;
  for (int i = 0; i < f.num_smooth_passes; ++i) {
    t = convolve3(t, f.smooth_kernel, PaddingMode::ZeroPad);
  }
  return laplacian_stencil(t);
}

Volume be_filter_adjoint(const BeFilter& f, const Volume& g) {
  Volume t = laplacian_stencil(g);
  for (int i = 0; i < f.num_smooth_passes; ++i) {
    t = convolve3(t, f.smooth_kernel, PaddingMode::ZeroPad);
  }
  return t;
}

}  // namespace volseg
