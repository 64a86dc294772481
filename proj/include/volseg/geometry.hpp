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

#include <string>
#include <utility>
#include <vector>

#include "volseg/volume.hpp"

namespace volseg {

/// Nonnegative voxel-center distances in millimeters; exactly 0 at the
/// foreground voxels of the source mask.
using DistanceMap = Volume;

struct MetricsRecord {
  std::string case_id;
  double dice = 0.0;
  double hausdorff95_mm = 0.0;
  double avg_surface_dist_mm = 0.0;
};

/// Exact Euclidean distance (mm, spacing-aware) from every voxel center to
/// the nearest foreground voxel center. Separable squared-distance passes
/// (lower envelope of parabolas per axis, x then y then z). Throws on an
/// empty mask.
DistanceMap euclidean_distance_transform(const BinaryMask& mask);

/// EDT(mask) - EDT(complement): negative strictly inside, positive strictly
/// outside, magnitude of one voxel step right at the surface. Throws unless
/// the mask has both classes.
Volume signed_distance_map(const BinaryMask& mask);

/// Foreground voxels with at least one 6-connected background neighbor;
/// volume borders count as background. Scan order (z, y, x ascending,
/// x fastest).
std::vector<std::array<int, 3>> extract_surface(const BinaryMask& mask);

/// 2|A op B| / (|A| + |B|); 1.0 when both masks are empty.
double dice_score(const BinaryMask& a, const BinaryMask& b);

/// (hausdorff95_mm, avg_surface_dist_mm), symmetric in the arguments.
/// Distances are pooled from both surface directions; the 95th percentile
/// interpolates linearly between order statistics at rank 0.95*(n-1).
/// Throws if either mask is empty.
std::pair<double, double> surface_metrics(const BinaryMask& pred,
                                          const BinaryMask& truth);

}  // namespace volseg
