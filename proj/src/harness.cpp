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
#include "volseg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "volseg/filtering.hpp"
#include "volseg/kernels.hpp"

namespace volseg {

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "dice") return LossMode::Dice;
  if (s == "dice+be") return LossMode::DiceBe;
  if (s == "dice+focal") return LossMode::DiceFocal;
  if (s == "dice+distance") return LossMode::DiceDistance;
  throw std::invalid_argument("unknown loss mode: " + s);
}

const char* loss_mode_to_string(LossMode m) {
  switch (m) {
    case LossMode::Dice: return "dice";
    case LossMode::DiceBe: return "dice+be";
    case LossMode::DiceFocal: return "dice+focal";
    case LossMode::DiceDistance: return "dice+distance";
  }
  return "?";
}

void TrainConfig::validate(const Dims3& volume_dims) const {
  for (int a = 0; a < 3; ++a) {
    if (patch_size[a] < 1 || patch_size[a] > volume_dims[a]) {
      throw std::invalid_argument("TrainConfig: patch_size exceeds volume");
    }
    if (window_size[a] < 1 || window_size[a] > volume_dims[a]) {
      throw std::invalid_argument("TrainConfig: window_size exceeds volume");
    }
  }
  if (window_overlap < 0.0 || window_overlap > 0.9) {
    throw std::invalid_argument("TrainConfig: window_overlap outside [0, 0.9]");
  }
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs < 1");
  if (val_interval < 1) {
    throw std::invalid_argument("TrainConfig: val_interval < 1");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (hidden_channels < 1) {
    throw std::invalid_argument("TrainConfig: hidden_channels < 1");
  }
  if (weights.lambda1 < 0.0 || weights.lambda2 < 0.0) {
    throw std::invalid_argument("TrainConfig: negative loss weight");
  }
  if (mode == LossMode::DiceBe && weights.lambda1 == 0.0 &&
      weights.lambda2 > 0.0) {
    throw std::invalid_argument(
        "TrainConfig: boundary term requires a nonzero overlap weight");
  }
}

namespace {

Volume crop_volume(const Volume& v, const Dims3& corner, const Dims3& size) {
  Volume out = Volume::create(size, v.spacing, 0.0);
  for (int z = 0; z < size[2]; ++z)
    for (int y = 0; y < size[1]; ++y)
      for (int x = 0; x < size[0]; ++x)
        out.at(x, y, z) = v.at(corner[0] + x, corner[1] + y, corner[2] + z);
  return out;
}

Volume flip_axis(const Volume& v, int axis) {
  Volume out = v;
  const int nx = v.nx(), ny = v.ny(), nz = v.nz();
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const int sx = axis == 0 ? nx - 1 - x : x;
        const int sy = axis == 1 ? ny - 1 - y : y;
        const int sz = axis == 2 ? nz - 1 - z : z;
        out.at(x, y, z) = v.at(sx, sy, sz);
      }
  return out;
}

}  // namespace

Sample random_crop(const Sample& sample, const Dims3& patch_size,
                   SplitMix64& rng) {
  const Volume& img = sample.image;
  Dims3 corner{0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    if (patch_size[a] > img.dims[a]) {
      throw std::invalid_argument("random_crop: patch larger than volume");
    }
    const int room = img.dims[a] - patch_size[a];
    corner[a] = room == 0 ? 0
                          : static_cast<int>(rng.next_below(
                                static_cast<std::uint64_t>(room) + 1));
  }
  return Sample{crop_volume(img, corner, patch_size),
                BinaryMask(crop_volume(sample.mask.volume(), corner, patch_size)),
                sample.spec};
}

Sample augment(const Sample& patch, const AugmentFlags& flags,
               SplitMix64& rng) {
  Volume img = patch.image;
  Volume msk = patch.mask.volume();
  if (flags.flip) {
    for (int axis = 0; axis < 3; ++axis) {
      if (rng.next_double() < 0.5) {
        img = flip_axis(img, axis);
        msk = flip_axis(msk, axis);
      }
    }
  }
  if (flags.intensity_shift) {
    const double s = rng.next_uniform(-flags.intensity_shift_range,
                                      flags.intensity_shift_range);
    for (double& v : img.data) v += s;
  }
  return Sample{std::move(img), BinaryMask(std::move(msk)), patch.spec};
}

std::vector<int> sliding_window_starts(int dim, int window, double overlap) {
  if (window == dim) return {0};
  const int stride = std::max(
      1, static_cast<int>(std::ceil(static_cast<double>(window) * (1.0 - overlap))));
  std::vector<int> starts;
  for (int s = 0; s + window < dim; s += stride) starts.push_back(s);
  starts.push_back(dim - window);  // flush to the far border
  return starts;
}

Volume sliding_window_infer(const TinyConvNet& net, const Volume& image,
                            const Dims3& window_size, double overlap) {
  for (int a = 0; a < 3; ++a) {
    if (window_size[a] < 1 || window_size[a] > image.dims[a]) {
      throw std::invalid_argument("sliding_window_infer: bad window size");
    }
  }
  if (overlap < 0.0 || overlap > 0.9) {
    throw std::invalid_argument("sliding_window_infer: overlap outside [0, 0.9]");
  }
  const auto xs = sliding_window_starts(image.dims[0], window_size[0], overlap);
  const auto ys = sliding_window_starts(image.dims[1], window_size[1], overlap);
  const auto zs = sliding_window_starts(image.dims[2], window_size[2], overlap);

  Volume sum = Volume::create(image.dims, image.spacing, 0.0);
  Volume count = Volume::create(image.dims, image.spacing, 0.0);
  for (int z0 : zs) {
    for (int y0 : ys) {
      for (int x0 : xs) {
        const Volume patch = crop_volume(image, {x0, y0, z0}, window_size);
        const Volume prob = net_forward(net, patch);
        for (int z = 0; z < window_size[2]; ++z)
          for (int y = 0; y < window_size[1]; ++y)
            for (int x = 0; x < window_size[0]; ++x) {
              sum.at(x0 + x, y0 + y, z0 + z) += prob.at(x, y, z);
              count.at(x0 + x, y0 + y, z0 + z) += 1.0;
            }
      }
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] /= count.data[i];
  return sum;
}

MetricsRecord evaluate_case(const std::string& case_id, const BinaryMask& pred,
                            const BinaryMask& truth) {
  MetricsRecord rec;
  rec.case_id = case_id;
  rec.dice = dice_score(pred, truth);
  if (pred.foreground_count() == 0 || truth.foreground_count() == 0) {
    const Volume& v = truth.volume();
    const double dx = v.spacing[0] * (v.nx() - 1);
    const double dy = v.spacing[1] * (v.ny() - 1);
    const double dz = v.spacing[2] * (v.nz() - 1);
    const double diagonal = std::sqrt(dx * dx + dy * dy + dz * dz);
    rec.hausdorff95_mm = diagonal;
    rec.avg_surface_dist_mm = diagonal;
  } else {
    const auto [hd95, asd] = surface_metrics(pred, truth);
    rec.hausdorff95_mm = hd95;
    rec.avg_surface_dist_mm = asd;
  }
  return rec;
}

namespace {

struct StepLoss {
  double total;
  double dice_term;
  double aux_term;
  Volume grad;
};

StepLoss loss_for_mode(const TrainConfig& cfg, const Volume& pred,
                       const BinaryMask& target, const BeFilter& filter) {
  const double l1 = cfg.weights.lambda1;
  const double l2 = cfg.weights.lambda2;
  const Volume zero = Volume::create(pred.dims, pred.spacing, 0.0);

  if (cfg.mode == LossMode::DiceBe) {
    const LossResult dice = soft_dice(pred, target);
    const LossResult r = combined_loss(pred, target, cfg.weights, filter);
    const double dice_term = l1 * dice.value;
    return {r.value, dice_term, r.value - dice_term, r.grad};
  }

  const LossResult dice = soft_dice(pred, target);
  double aux_value = 0.0;
  Volume grad = axpy(l1, dice.grad, zero);
  if (cfg.mode == LossMode::DiceFocal && l2 > 0.0) {
    const LossResult focal =
        focal_loss(pred, target, cfg.focal_gamma, cfg.focal_alpha);
    aux_value = l2 * focal.value;
    grad = axpy(l2, focal.grad, grad);
  } else if (cfg.mode == LossMode::DiceDistance && l2 > 0.0) {
    const std::size_t fg = target.foreground_count();
    if (fg > 0 && fg < target.volume().size()) {
      const Volume phi = signed_distance_map(target);
      const LossResult dist = distance_boundary_loss(pred, target, phi);
      aux_value = l2 * dist.value;
      grad = axpy(l2, dist.grad, grad);
    }
    // single-class patch: the signed distance map is undefined, the
    // distance term is skipped for this step
  }
  const double dice_term = l1 * dice.value;
  return {dice_term + aux_value, dice_term, aux_value, std::move(grad)};
}

}  // namespace

TrainResult train(const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set,
                  const TrainConfig& config) {
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  config.validate(train_set.front().image.dims);

  const BeFilter filter = BeFilter::standard();
  TinyConvNet net =
      TinyConvNet::init(config.hidden_channels, derive_seed(config.seed, 0x11));
  SplitMix64 loop_rng(derive_seed(config.seed, 0x22));
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  AdamState adam(net.param_count(), adam_cfg);
  std::vector<double> params = flatten_params(net);

  TrainHistory history;
  int global_step = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto run_validation = [&](int epoch) {
    if (val_set.empty()) return;
    ValidationRecord rec;
    rec.epoch = epoch;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
      const Volume prob = sliding_window_infer(
          net, val_set[i].image, config.window_size, config.window_overlap);
      const BinaryMask pred = threshold(prob, 0.5);
      char case_id[32];
      std::snprintf(case_id, sizeof(case_id), "case%03zu", i);
      rec.cases.push_back(evaluate_case(case_id, pred, val_set[i].mask));
    }
    history.validations.push_back(std::move(rec));
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // seeded Fisher-Yates pass per epoch
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = loop_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      Sample patch = random_crop(train_set[idx], config.patch_size, loop_rng);
      patch = augment(patch, config.augment, loop_rng);

      ForwardCache cache;
      const Volume prob = net_forward(net, patch.image, &cache);
      StepLoss loss = loss_for_mode(config, prob, patch.mask, filter);
      ++global_step;
      if (!std::isfinite(loss.total)) {
        throw std::runtime_error("train: non-finite loss at step " +
                                 std::to_string(global_step));
      }
      history.steps.push_back(
          {epoch, global_step, loss.total, loss.dice_term, loss.aux_term});

      const NetGradients grads = net_backward(net, cache, loss.grad);
      const std::vector<double> flat_grads = flatten_grads(grads);
      adam.step(params, flat_grads);
      unflatten_params(net, params);
    }
    if (epoch % config.val_interval == 0 && epoch != config.epochs) {
      run_validation(epoch);
    }
  }
  run_validation(config.epochs);

  return TrainResult{std::move(net), std::move(history)};
}

}  // namespace volseg
