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

#include "volseg/geometry.hpp"
#include "volseg/losses.hpp"
#include "volseg/net.hpp"
#include "volseg/phantoms.hpp"
#include "volseg/rng.hpp"

namespace volseg {

enum class LossMode { Dice, DiceBe, DiceFocal, DiceDistance };

LossMode loss_mode_from_string(const std::string& s);
const char* loss_mode_to_string(LossMode m);

struct AugmentFlags {
  bool flip = true;
  bool intensity_shift = true;
  double intensity_shift_range = 0.1;
};

struct TrainConfig {
  LossMode mode = LossMode::Dice;
  LossWeights weights{1.0, 1000.0};
  int epochs = 15;
  Dims3 patch_size{24, 24, 24};
  Dims3 window_size{24, 24, 24};
  double window_overlap = 0.25;
  AugmentFlags augment;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  int hidden_channels = 8;
  int val_interval = 5;  ///< validate every this many epochs (and at the end)
  double focal_gamma = 2.0;
  double focal_alpha = 0.5;

  void validate(const Dims3& volume_dims) const;
};

/// Aligned image/mask crop at a seeded uniform corner. Throws if the patch
/// exceeds the volume.
Sample random_crop(const Sample& sample, const Dims3& patch_size,
                   SplitMix64& rng);

/// Per-axis flip with probability 1/2 each (image and mask together), then
/// an optional uniform intensity shift on the image only. Draw order:
/// flip x, flip y, flip z, shift.
Sample augment(const Sample& patch, const AugmentFlags& flags,
               SplitMix64& rng);

/// Window start offsets along one axis: stride ceil(window * (1 - overlap)),
/// with the final window clamped flush to the far border. Together the
/// windows cover every voxel at least once.
std::vector<int> sliding_window_starts(int dim, int window, double overlap);

/// Tiles the volume with windows at the offsets above and averages
/// predictions voxelwise with uniform weight per covering window.
Volume sliding_window_infer(const TinyConvNet& net, const Volume& image,
                            const Dims3& window_size, double overlap);

struct StepRecord {
  int epoch = 0;
  int step = 0;  ///< global step, 1-based
  double total = 0.0;
  double dice_term = 0.0;
  double aux_term = 0.0;
};

struct ValidationRecord {
  int epoch = 0;
  std::vector<MetricsRecord> cases;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<ValidationRecord> validations;
};

struct TrainResult {
  TinyConvNet net;
  TrainHistory history;
};

/// Batch-1 training loop: seeded epoch shuffle, random crop, augmentation,
/// forward, loss by mode, manual backward, Adam. Deterministic in
/// (datasets, config). Validation runs sliding-window inference, thresholds
/// at 0.5 and records Dice plus surface metrics per case. Throws on a
/// non-finite loss.
///
/// Degenerate-case conventions (recorded, so aggregates stay finite):
///  - a single-class target patch contributes no distance-loss term;
///  - an empty predicted or truth mask at validation scores surface
///    distances as the volume diagonal.
TrainResult train(const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set,
                  const TrainConfig& config);

/// Dice plus surface metrics for one prediction, applying the
/// empty-mask-diagonal convention above.
MetricsRecord evaluate_case(const std::string& case_id, const BinaryMask& pred,
                            const BinaryMask& truth);

}  // namespace volseg
