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

#include "volseg/volume.hpp"

namespace volseg {

/// Border handling for same-size convolution. Only zero padding exists;
/// the enum keeps call sites explicit about it.
enum class PaddingMode { ZeroPad };

/// All 27 weights equal to 1/27; one pass averages the 3x3x3 neighborhood.
Kernel3 box_kernel();

/// 7-point discrete Laplacian: -6 at the center, +1 at the six
/// face-adjacent offsets, 0 elsewhere.
Kernel3 laplacian_kernel();

/// Same-size 3x3x3 convolution with zero padding:
///   out(p) = sum_{o in {-1,0,1}^3} k(o) * v(p + o),
/// out-of-range reads contributing nothing. Taps accumulate in ascending
/// linear tap index per output voxel; the result is identical whichever
/// kernel backend runs.
Volume convolve3(const Volume& v, const Kernel3& k, PaddingMode pad);

/// The boundary band-pass: three box smoothing passes followed by the
/// discrete Laplacian. Kernels are fixed at construction and never trained.
struct BeFilter {
  Kernel3 smooth_kernel;
  Kernel3 laplacian_kernel;
  int num_smooth_passes = 3;

  static BeFilter standard();
};

/// L(v) = laplacian . box^passes applied to v. Linear in v; constant
/// volumes map to exactly zero at voxels at least passes+1 voxels away
/// from every border.
///
/// The Laplacian stage evaluates as
///   ((x- + x+) + (y- + y+) + (z- + z+)) - 6*center
/// with that exact association, which cancels bit-exactly on constant
/// neighborhoods. It is the same linear map as convolve3 with the
/// 7-point kernel, up to rounding.
Volume be_filter_apply(const BeFilter& f, const Volume& v);

/// Adjoint of be_filter_apply under the voxelwise dot product:
/// box^passes . laplacian (stage order reversed, each stage self-adjoint
/// because its stencil is point-symmetric and padding is zero).
Volume be_filter_adjoint(const BeFilter& f, const Volume& g);

}  // namespace volseg
