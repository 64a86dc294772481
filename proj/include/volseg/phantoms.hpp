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
#include <string>
#include <vector>

#include "volseg/volume.hpp"

namespace volseg {

enum class PhantomShape { Sphere, Ellipsoid, Blob };

PhantomShape phantom_shape_from_string(const std::string& s);
const char* phantom_shape_to_string(PhantomShape s);

/// Parametric synthetic test object. The mask is a clean analytic
/// indicator; only the image gets the fuzz and the noise. Objects must
/// keep a 5-voxel margin from every border so the zero-padded boundary
/// filter never sees them against the volume edge.
struct PhantomSpec {
  PhantomShape shape = PhantomShape::Sphere;
  Dims3 dims{32, 32, 32};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::array<double, 3> center{16.0, 16.0, 16.0};
  std::array<double, 3> radii{8.0, 8.0, 8.0};
  double fuzz_sigma = 0.0;    ///< edge blur width, voxels
  double noise_sigma = 0.0;   ///< additive noise amplitude
  double contrast_bg = 0.2;   ///< background image intensity
  double contrast_fg = 0.8;   ///< foreground image intensity
  std::uint64_t seed = 0;

  /// Margin every foreground voxel must keep from each border.
  static constexpr int kBorderMargin = 5;

  /// Throws std::invalid_argument when radii/sigmas are out of range or the
  /// object (including the worst-case blob bulge) cannot honor the margin.
  void validate() const;
};

struct Sample {
  Volume image;
  BinaryMask mask;
  PhantomSpec spec;
};

/// Deterministic in spec: identical specs give bitwise-identical samples.
/// The blob's radial perturbation and the image noise draw from separate
/// streams derived from spec.seed, so noise never moves the mask.
Sample generate(const PhantomSpec& spec);

/// n samples with seeded jitter of center and radii (and blob wobble)
/// around the template. Jittered specs violating the margin are redrawn up
/// to a bounded retry count, then rejected.
std::vector<Sample> generate_dataset(int n, const PhantomSpec& tmpl,
                                     std::uint64_t seed);

}  // namespace volseg
