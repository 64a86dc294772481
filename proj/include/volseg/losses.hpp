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
#include <functional>

#include "volseg/filtering.hpp"
#include "volseg/volume.hpp"

namespace volseg {

/// A loss value together with its gradient with respect to the prediction
/// volume. Both are validated finite before they leave a loss function.
struct LossResult {
  double value = 0.0;
  Volume grad;
};

/// Weights of the combined objective: lambda1 scales the overlap term,
/// lambda2 the boundary term. The boundary term is blind to the interior
/// versus exterior of a region, so it must not run without the overlap
/// term: combined_loss rejects lambda1 == 0 with lambda2 > 0.
struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1000.0;
};

/// Smoothing constant added to numerator and denominator of the soft Dice
/// ratio; guards patches with empty foreground.
inline constexpr double kDiceEpsilon = 1e-7;

/// Clamp bound for probabilities entering logarithms.
inline constexpr double kProbEpsilon = 1e-7;

/// Squared-denominator soft Dice:
///   value = 1 - (2*sum(p*g) + eps) / (sum(p^2) + sum(g^2) + eps),
/// in [0, 1]. Throws on dim mismatch or pred outside [0, 1].
LossResult soft_dice(const Volume& pred, const BinaryMask& target);

/// value = || L(pred - target) ||_2 with L the boundary band-pass filter;
/// grad = L^T(r) / ||r|| for r = L(pred - target), and 0 when ||r|| = 0.
/// The difference is filtered once; by linearity this equals
/// L(pred) - L(target) up to rounding.
LossResult boundary_enhancement(const Volume& pred, const BinaryMask& target,
                                const BeFilter& f);

/// lambda1 * soft_dice + lambda2 * boundary_enhancement, values and
/// gradients alike.
LossResult combined_loss(const Volume& pred, const BinaryMask& target,
                         const LossWeights& w, const BeFilter& f);

/// Mean over voxels of
///   -alpha*g*(1-p)^gamma*ln(p) - (1-alpha)*(1-g)*p^gamma*ln(1-p)
/// with p clamped to [kProbEpsilon, 1 - kProbEpsilon]. gamma = 0,
/// alpha = 0.5 reduces to half the mean binary cross-entropy.
LossResult focal_loss(const Volume& pred, const BinaryMask& target,
                      double gamma = 2.0, double alpha = 0.5);

/// Mean over voxels of phi * pred, where phi is the signed distance map of
/// the target (negative inside). Linear in pred; grad = phi / voxel count.
LossResult distance_boundary_loss(const Volume& pred, const BinaryMask& target,
                                  const Volume& phi);

struct GradCheckReport {
  double max_rel_error = 0.0;
  int samples = 0;
};

/// Central finite-difference check of an analytical gradient at `samples`
/// seeded voxel positions. Relative error per voxel is
///   |analytic - fd| / max(|analytic|, |fd|, denom_floor).
GradCheckReport check_gradient(
    const std::function<LossResult(const Volume&)>& loss, const Volume& pred,
    double step, int samples, std::uint64_t seed, double denom_floor = 1e-6);

}  // namespace volseg
