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
#include "volseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "volseg/kernels.hpp"
#include "volseg/rng.hpp"

namespace volseg {

namespace {

void require_same_dims(const Volume& pred, const BinaryMask& target,
                       const char* what) {
  if (!pred.same_dims(target.volume())) {
    throw std::invalid_argument(std::string(what) + ": dims mismatch");
  }
}

void finalize(LossResult& r, const char* what) {
  if (!std::isfinite(r.value)) {
    throw std::invalid_argument(std::string(what) + ": non-finite loss value");
  }
  require_finite(r.grad, what);
}

}  // namespace

LossResult soft_dice(const Volume& pred, const BinaryMask& target) {
  require_same_dims(pred, target, "soft_dice");
  for (double p : pred.data) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("soft_dice: pred outside [0,1]");
    }
  }
  const Volume& g = target.volume();
  const auto& kops = kernels::ops();
  const std::size_t n = pred.size();

  const double inter = kops.dot(pred.data.data(), g.data.data(), n);
  const double p2 = kops.sum_sq(pred.data.data(), n);
  const double g2 = kops.sum_sq(g.data.data(), n);

  const double num = 2.0 * inter + kDiceEpsilon;
  const double den = p2 + g2 + kDiceEpsilon;

  LossResult r;
  r.value = 1.0 - num / den;
  r.grad = Volume::create(pred.dims, pred.spacing, 0.0);
  const double inv_den2 = 1.0 / (den * den);
  for (std::size_t i = 0; i < n; ++i) {
    // d/dp_i [1 - num/den] = (num * 2p_i - 2g_i * den) / den^2
    r.grad.data[i] =
        (num * 2.0 * pred.data[i] - 2.0 * g.data[i] * den) * inv_den2;
  }
  finalize(r, "soft_dice");
  return r;
}

LossResult boundary_enhancement(const Volume& pred, const BinaryMask& target,
                                const BeFilter& f) {
  require_same_dims(pred, target, "boundary_enhancement");
  const Volume diff = axpy(-1.0, target.volume(), pred);
  const Volume resid = be_filter_apply(f, diff);
  const double norm = l2_norm(resid);

  LossResult r;
  r.value = norm;
  if (norm == 0.0) {
    // Subgradient choice at the kink of the norm.
    r.grad = Volume::create(pred.dims, pred.spacing, 0.0);
  } else {
    Volume adj = be_filter_adjoint(f, resid);
    const Volume zero = Volume::create(pred.dims, pred.spacing, 0.0);
    r.grad = axpy(1.0 / norm, adj, zero);
  }
  finalize(r, "boundary_enhancement");
  return r;
}

LossResult combined_loss(const Volume& pred, const BinaryMask& target,
                         const LossWeights& w, const BeFilter& f) {
  if (w.lambda1 < 0.0 || w.lambda2 < 0.0) {
    throw std::invalid_argument("combined_loss: negative weight");
  }
  if (w.lambda1 == 0.0 && w.lambda2 > 0.0) {
    throw std::invalid_argument(
        "combined_loss: boundary term cannot run without the overlap term");
  }
  const LossResult dice = soft_dice(pred, target);
  LossResult r;
  if (w.lambda2 == 0.0) {
    r.value = w.lambda1 * dice.value;
    const Volume zero = Volume::create(pred.dims, pred.spacing, 0.0);
    r.grad = axpy(w.lambda1, dice.grad, zero);
  } else {
    const LossResult be = boundary_enhancement(pred, target, f);
    r.value = w.lambda1 * dice.value + w.lambda2 * be.value;
    const Volume zero = Volume::create(pred.dims, pred.spacing, 0.0);
    const Volume be_part = axpy(w.lambda2, be.grad, zero);
    r.grad = axpy(w.lambda1, dice.grad, be_part);
  }
  finalize(r, "combined_loss");
  return r;
}

LossResult focal_loss(const Volume& pred, const BinaryMask& target,
                      double gamma, double alpha) {
  require_same_dims(pred, target, "focal_loss");
  if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma < 0");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("focal_loss: alpha outside (0,1)");
  }
  const Volume& g = target.volume();
  const std::size_t n = pred.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossResult r;
  r.grad = Volume::create(pred.dims, pred.spacing, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double raw = pred.data[i];
    const double p = std::clamp(raw, kProbEpsilon, 1.0 - kProbEpsilon);
    const double gi = g.data[i];
    const double q = 1.0 - p;
    const double log_p = std::log(p);
    const double log_q = std::log(q);

    // value terms
    const double pow_q = (gamma == 0.0) ? 1.0 : std::pow(q, gamma);
    const double pow_p = (gamma == 0.0) ? 1.0 : std::pow(p, gamma);
    acc += -alpha * gi * pow_q * log_p - (1.0 - alpha) * (1.0 - gi) * pow_p * log_q;

    // derivative; zero where the clamp is active (value is flat there)
    if (raw < kProbEpsilon || raw > 1.0 - kProbEpsilon) continue;
    double d = 0.0;
    if (gi != 0.0) {
      const double dpow_q = (gamma == 0.0) ? 0.0 : gamma * std::pow(q, gamma - 1.0);
      d += -alpha * gi * (-dpow_q * log_p + pow_q / p);
    }
    if (gi != 1.0) {
      const double dpow_p = (gamma == 0.0) ? 0.0 : gamma * std::pow(p, gamma - 1.0);
      d += -(1.0 - alpha) * (1.0 - gi) * (dpow_p * log_q - pow_p / q);
    }
    r.grad.data[i] = d * inv_n;
  }
  r.value = acc * inv_n;
  finalize(r, "focal_loss");
  return r;
}

LossResult distance_boundary_loss(const Volume& pred, const BinaryMask& target,
                                  const Volume& phi) {
  require_same_dims(pred, target, "distance_boundary_loss");
  if (!pred.same_dims(phi)) {
    throw std::invalid_argument("distance_boundary_loss: phi dims mismatch");
  }
  const std::size_t n = pred.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossResult r;
  r.value = kernels::ops().dot(phi.data.data(), pred.data.data(), n) * inv_n;
  r.grad = Volume::create(pred.dims, pred.spacing, 0.0);
  for (std::size_t i = 0; i < n; ++i) r.grad.data[i] = phi.data[i] * inv_n;
  finalize(r, "distance_boundary_loss");
  return r;
}

GradCheckReport check_gradient(
    const std::function<LossResult(const Volume&)>& loss, const Volume& pred,
    double step, int samples, std::uint64_t seed, double denom_floor) {
  if (!(step > 0.0 && step <= 1e-2)) {
    throw std::invalid_argument("check_gradient: step outside (0, 1e-2]");
  }
  if (samples < 1) throw std::invalid_argument("check_gradient: samples < 1");
  if (static_cast<std::size_t>(samples) > pred.size()) {
    throw std::invalid_argument("check_gradient: more samples than voxels");
  }

  const LossResult base = loss(pred);
  SplitMix64 rng(seed);
  GradCheckReport report;
  report.samples = samples;
  Volume work = pred;
  std::vector<bool> seen(pred.size(), false);
  for (int s = 0; s < samples; ++s) {
    // distinct coordinates: redraw on collision
    std::size_t i = rng.next_below(pred.size());
    while (seen[i]) i = rng.next_below(pred.size());
    seen[i] = true;
    const double saved = work.data[i];
    work.data[i] = saved + step;
    const double up = loss(work).value;
    work.data[i] = saved - step;
    const double down = loss(work).value;
    work.data[i] = saved;

    const double fd = (up - down) / (2.0 * step);
    const double analytic = base.grad.data[i];
    const double denom =
        std::max({std::fabs(analytic), std::fabs(fd), denom_floor});
    const double rel = std::fabs(analytic - fd) / denom;
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  return report;
}

}  // namespace volseg
