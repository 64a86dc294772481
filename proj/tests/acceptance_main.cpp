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

// End-to-end acceptance suite. Each criterion prints exactly one
// [PASS]/[FAIL] line; the exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "volseg/filtering.hpp"
#include "volseg/geometry.hpp"
#include "volseg/harness.hpp"
#include "volseg/losses.hpp"
#include "volseg/net.hpp"
#include "volseg/phantoms.hpp"
#include "volseg/pipeline.hpp"
#include "volseg/rng.hpp"
#include "volseg/volume.hpp"

using namespace volseg;

namespace {

std::string g_configs_dir = "configs";
std::string g_work_dir = "acceptance_work";

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(const char* name, double budget_seconds,
                   const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = fn();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (out.pass && secs > budget_seconds) {
    out.pass = false;
    out.detail += " [over time budget]";
  }
  std::printf("[%s] %-26s %s (%.1fs, budget %.0fs)\n",
              out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs,
              budget_seconds);
  std::fflush(stdout);
  if (!out.pass) ++g_failures;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

BinaryMask sphere_mask(const Dims3& dims, double cx, double cy, double cz,
                       double r) {
  Volume v = Volume::create(dims, {1, 1, 1}, 0.0);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        if (std::sqrt(dx * dx + dy * dy + dz * dz) <= r) v.at(x, y, z) = 1.0;
      }
  return BinaryMask(std::move(v));
}

// --------------------------------------------------------------------------
// 1. convolution engine vs brute-force oracle, bitwise, 50 random pairs
// --------------------------------------------------------------------------
Outcome convolution_oracle() {
  SplitMix64 rng(0xC0DE);
  for (int it = 0; it < 50; ++it) {
    const Dims3 dims{static_cast<int>(1 + rng.next_below(8)),
                     static_cast<int>(1 + rng.next_below(8)),
                     static_cast<int>(1 + rng.next_below(8))};
    const Volume v = oracle::random_volume(dims, rng);
    Kernel3 k;
    switch (it % 3) {
      case 0: k = box_kernel(); break;
      case 1: k = laplacian_kernel(); break;
      default: k = oracle::random_kernel(rng); break;
    }
    const Volume fast = convolve3(v, k, PaddingMode::ZeroPad);
    const Volume slow = oracle::convolve3(v, k);
    if (fast.data != slow.data) {
      return {false, "mismatch at trial " + std::to_string(it)};
    }
  }
  return {true, "50/50 volumes bitwise equal"};
}

// --------------------------------------------------------------------------
// 2. constant input -> exact zero deep inside; impulse support within 9^3
// --------------------------------------------------------------------------
Outcome filter_structure() {
  const BeFilter f = BeFilter::standard();
  for (double c : {1.0, 0.37, -4.2}) {
    const Volume v = Volume::create({14, 14, 14}, {1, 1, 1}, c);
    const Volume out = be_filter_apply(f, v);
    for (int z = 4; z < 10; ++z)
      for (int y = 4; y < 10; ++y)
        for (int x = 4; x < 10; ++x) {
          if (out.at(x, y, z) != 0.0) {
            return {false, fmt("constant %.2f leaks %.3e at (%d,%d,%d)", c,
                               out.at(x, y, z), x, y, z)};
          }
        }
  }
  Volume impulse = Volume::create({17, 17, 17}, {1, 1, 1}, 0.0);
  impulse.at(8, 8, 8) = 1.0;
  const Volume resp = be_filter_apply(f, impulse);
  for (int z = 0; z < 17; ++z)
    for (int y = 0; y < 17; ++y)
      for (int x = 0; x < 17; ++x) {
        const bool inside = std::abs(x - 8) <= 4 && std::abs(y - 8) <= 4 &&
                            std::abs(z - 8) <= 4;
        if (!inside && resp.at(x, y, z) != 0.0) {
          return {false, fmt("impulse leaks outside 9^3 at (%d,%d,%d)", x, y, z)};
        }
      }
  return {true, "constants cancel exactly; impulse support within 9^3"};
}

// --------------------------------------------------------------------------
// 3. adjoint identity on 20 random 8^3 pairs
// --------------------------------------------------------------------------
Outcome adjoint_identity() {
  SplitMix64 rng(0xAD01);
  const BeFilter f = BeFilter::standard();
  double worst = 0.0;
  for (int it = 0; it < 20; ++it) {
    const Volume a = oracle::random_volume({8, 8, 8}, rng);
    const Volume b = oracle::random_volume({8, 8, 8}, rng);
    const Volume la = be_filter_apply(f, a);
    const Volume ltb = be_filter_adjoint(f, b);
    const double denom = l2_norm(la) * l2_norm(b);
    if (denom == 0.0) return {false, "degenerate random pair"};
    worst = std::max(worst, std::fabs(dot(la, b) - dot(a, ltb)) / denom);
  }
  return {worst <= 1e-12,
          fmt("max normalized error %.2e (bound 1e-12)", worst)};
}

// --------------------------------------------------------------------------
// 4. gradient suite: every loss plus the net composition vs central FD
// --------------------------------------------------------------------------
Outcome gradient_suite() {
  SplitMix64 rng(0x9A4D);
  const Dims3 dims{8, 8, 8};
  Volume pred = Volume::create(dims, {1, 1, 1}, 0.0);
  for (double& p : pred.data) p = rng.next_uniform(0.05, 0.95);
  const BinaryMask target = oracle::random_mask(dims, rng, 0.4);
  const BeFilter filter = BeFilter::standard();

  struct Item {
    const char* name;
    double err;
    double bound;
  };
  std::vector<Item> items;

  items.push_back({"soft_dice",
                   check_gradient([&](const Volume& p) { return soft_dice(p, target); },
                                  pred, 1e-5, 60, 1)
                       .max_rel_error,
                   1e-4});
  items.push_back(
      {"boundary_enhancement",
       check_gradient(
           [&](const Volume& p) { return boundary_enhancement(p, target, filter); },
           pred, 1e-5, 60, 2)
           .max_rel_error,
       1e-4});
  items.push_back(
      {"combined",
       check_gradient(
           [&](const Volume& p) {
             return combined_loss(p, target, LossWeights{1.0, 1000.0}, filter);
           },
           pred, 1e-5, 60, 3)
           .max_rel_error,
       1e-4});
  items.push_back(
      {"focal",
       check_gradient(
           [&](const Volume& p) { return focal_loss(p, target, 2.0, 0.5); },
           pred, 1e-5, 60, 4)
           .max_rel_error,
       1e-4});
  const Volume phi = signed_distance_map(target);
  items.push_back(
      {"distance",
       check_gradient(
           [&](const Volume& p) { return distance_boundary_loss(p, target, phi); },
           pred, 1e-3, 60, 5)
           .max_rel_error,
       1e-8});

  // full net composition through the combined loss
  const TinyConvNet net = TinyConvNet::init(4, 0xBEEF);
  Volume image = Volume::create(dims, {1, 1, 1}, 0.0);
  for (double& v : image.data) v = rng.next_uniform(0.0, 1.0);
  auto loss_of = [&](const TinyConvNet& n) {
    return combined_loss(net_forward(n, image), target,
                         LossWeights{1.0, 1000.0}, filter)
        .value;
  };
  ForwardCache cache;
  const Volume prob = net_forward(net, image, &cache);
  const LossResult base =
      combined_loss(prob, target, LossWeights{1.0, 1000.0}, filter);
  const std::vector<double> analytic =
      flatten_grads(net_backward(net, cache, base.grad));
  std::vector<double> flat = flatten_params(net);
  double net_err = 0.0;
  SplitMix64 pick(0xF00D);
  std::vector<bool> seen(flat.size(), false);
  for (int s = 0; s < 50; ++s) {
    std::size_t i = pick.next_below(flat.size());
    while (seen[i]) i = pick.next_below(flat.size());
    seen[i] = true;
    const double saved = flat[i];
    const double step = 1e-5;
    TinyConvNet probe = net;
    flat[i] = saved + step;
    unflatten_params(probe, flat);
    const double up = loss_of(probe);
    flat[i] = saved - step;
    unflatten_params(probe, flat);
    const double down = loss_of(probe);
    flat[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
    net_err = std::max(net_err, std::fabs(fd - analytic[i]) / denom);
  }
  items.push_back({"net_composition", net_err, 1e-4});

  std::string detail;
  bool ok = true;
  for (const auto& it : items) {
    ok = ok && it.err <= it.bound;
    if (!detail.empty()) detail += ", ";
    detail += fmt("%s %.1e", it.name, it.err);
  }
  return {ok, detail};
}

// --------------------------------------------------------------------------
// 5. exact EDT vs all-pairs oracle on 20 random masks
// --------------------------------------------------------------------------
Outcome edt_oracle() {
  SplitMix64 rng(0xED7);
  const Spacing3 spacings[] = {{1, 1, 1}, {0.5, 0.5, 0.5}, {1, 2, 0.5}};
  int done = 0;
  while (done < 20) {
    const Dims3 dims{static_cast<int>(2 + rng.next_below(11)),
                     static_cast<int>(2 + rng.next_below(11)),
                     static_cast<int>(2 + rng.next_below(11))};
    Volume v = Volume::create(dims, spacings[done % 3], 0.0);
    for (double& x : v.data) x = rng.next_double() < 0.15 ? 1.0 : 0.0;
    BinaryMask m(std::move(v));
    if (m.foreground_count() == 0) continue;
    const DistanceMap fast = euclidean_distance_transform(m);
    const Volume slow = oracle::edt(m);
    if (fast.data != slow.data) {
      return {false, fmt("mismatch on mask %d", done)};
    }
    ++done;
  }
  return {true, "20/20 masks exactly equal (incl. anisotropic spacing)"};
}

// --------------------------------------------------------------------------
// 6. boundary-loss identities
// --------------------------------------------------------------------------
Outcome eq2_identities() {
  const BeFilter f = BeFilter::standard();
  const Dims3 dims{24, 24, 24};
  const BinaryMask target = sphere_mask(dims, 11.5, 11.5, 11.5, 5.0);

  // zero at equality, exactly
  const LossResult zero = boundary_enhancement(target.volume(), target, f);
  if (zero.value != 0.0) return {false, "nonzero at pred == target"};

  // swap symmetry, exactly: ||L(p-y)|| == ||L(y-p)||
  SplitMix64 rng(0xE92);
  Volume pred = Volume::create(dims, {1, 1, 1}, 0.0);
  for (double& p : pred.data) p = rng.next_uniform(0.0, 1.0);
  const Volume d1 = axpy(-1.0, target.volume(), pred);
  const Volume d2 = axpy(-1.0, pred, target.volume());
  const double n1 = l2_norm(be_filter_apply(f, d1));
  const double n2 = l2_norm(be_filter_apply(f, d2));
  if (n1 != n2) return {false, fmt("swap asymmetry: %.17g vs %.17g", n1, n2)};

  // single-voxel perturbation: value == |delta| * ||L(e)||
  Volume impulse = Volume::create(dims, {1, 1, 1}, 0.0);
  impulse.at(19, 19, 19) = 1.0;
  Volume ref = impulse;
  for (int i = 0; i < 3; ++i) ref = oracle::convolve3(ref, box_kernel());
  ref = oracle::convolve3(ref, laplacian_kernel());
  const double impulse_norm = l2_norm(ref);

  double worst = 0.0;
  for (double delta : {0.5, 0.3}) {
    Volume p = target.volume();
    p.at(19, 19, 19) += delta;  // deep-background voxel
    const double value = boundary_enhancement(p, target, f).value;
    worst = std::max(worst,
                     std::fabs(value - delta * impulse_norm) / impulse_norm);
  }
  return {worst <= 1e-10,
          fmt("perturbation error %.2e (bound 1e-10)", worst)};
}

// --------------------------------------------------------------------------
// 7. boundary term is blind to interior/exterior; dice tracks volume
// --------------------------------------------------------------------------
Outcome dice_degeneracy() {
  const Dims3 dims{32, 32, 32};
  const BinaryMask target = sphere_mask(dims, 16, 16, 16, 8.0);
  const BeFilter f = BeFilter::standard();

  auto flip_block = [&](int cx, int cy, int cz, int half) {
    Volume p = target.volume();
    for (int z = cz - half; z <= cz + half; ++z)
      for (int y = cy - half; y <= cy + half; ++y)
        for (int x = cx - half; x <= cx + half; ++x)
          p.at(x, y, z) = 1.0 - p.at(x, y, z);
    return p;
  };

  const double be_in = boundary_enhancement(flip_block(16, 16, 16, 1), target, f).value;
  const double be_out = boundary_enhancement(flip_block(7, 7, 25, 1), target, f).value;
  if (be_in <= 0.0) return {false, "block produced no boundary response"};
  if (std::fabs(be_in - be_out) > 1e-12 * be_in) {
    return {false, fmt("interior %.6e vs exterior %.6e", be_in, be_out)};
  }

  double prev = soft_dice(target.volume(), target).value;
  for (int half = 0; half <= 2; ++half) {
    const double cur = soft_dice(flip_block(16, 16, 16, half), target).value;
    if (!(cur > prev)) {
      return {false, fmt("dice not strictly increasing at block half %d", half)};
    }
    prev = cur;
  }
  return {true,
          fmt("boundary term location-blind (rel diff %.1e); dice strictly grows",
              std::fabs(be_in - be_out) / be_in)};
}

// --------------------------------------------------------------------------
// 8. overfit smoke test: one sphere phantom, dice-only, 300 steps
// --------------------------------------------------------------------------
Outcome overfit_smoke() {
  PhantomSpec spec;
  spec.shape = PhantomShape::Sphere;
  spec.dims = {32, 32, 32};
  spec.center = {15.5, 15.5, 15.5};
  spec.radii = {8, 8, 8};
  spec.fuzz_sigma = 1.0;
  spec.noise_sigma = 0.02;
  spec.seed = 5;
  const Sample sample = generate(spec);

  TrainConfig cfg;
  cfg.mode = LossMode::Dice;
  cfg.weights = LossWeights{1.0, 0.0};
  cfg.epochs = 300;  // one sample, batch 1: one step per epoch
  cfg.patch_size = {32, 32, 32};
  cfg.window_size = {32, 32, 32};
  cfg.window_overlap = 0.25;
  cfg.augment.flip = false;
  cfg.augment.intensity_shift = false;
  cfg.seed = 17;
  cfg.lr = 3e-3;
  cfg.hidden_channels = 8;
  cfg.val_interval = 1000;

  const std::vector<Sample> train_set{sample};
  const std::vector<Sample> val_set;
  const TrainResult result = train(train_set, val_set, cfg);

  const Volume prob = net_forward(result.net, sample.image);
  const double dice = dice_score(threshold(prob, 0.5), sample.mask);
  return {dice >= 0.95,
          fmt("training dice %.4f after 300 steps (bound 0.95)", dice)};
}

// --------------------------------------------------------------------------
// 9. directional experiment: boundary term helps surface quality
// --------------------------------------------------------------------------
struct LabelStats {
  double dice_mean = 0.0;
  double asd_mean = 0.0;
  int n = 0;
};

std::map<std::string, LabelStats> stats_by_label(const std::vector<CaseRow>& rows) {
  std::map<std::string, LabelStats> m;
  for (const auto& r : rows) {
    auto& s = m[r.mode];
    s.dice_mean += r.dice;
    s.asd_mean += r.asd_mm;
    s.n += 1;
  }
  for (auto& [label, s] : m) {
    s.dice_mean /= s.n;
    s.asd_mean /= s.n;
  }
  return m;
}

Outcome directional_experiment() {
  const ExperimentConfig cfg =
      load_experiment_config(g_configs_dir + "/directional.json");
  const ExperimentReport report =
      run_experiment(cfg, g_work_dir + "/directional");
  const auto stats = stats_by_label(report.rows);

  const auto dice_only = stats.find("dice");
  if (dice_only == stats.end()) return {false, "missing dice-only run"};

  std::string best_label;
  LabelStats best{};
  for (const auto& [label, s] : stats) {
    if (label == "dice") continue;
    if (best_label.empty() || s.asd_mean < best.asd_mean ||
        (s.asd_mean == best.asd_mean && s.dice_mean > best.dice_mean)) {
      best_label = label;
      best = s;
    }
  }
  if (best_label.empty()) return {false, "no tuned boundary runs found"};

  const bool asd_ok = best.asd_mean <= dice_only->second.asd_mean;
  const bool dice_ok = best.dice_mean >= dice_only->second.dice_mean - 0.02;
  return {asd_ok && dice_ok,
          fmt("%s: asd %.3f vs dice-only %.3f; dice %.3f vs %.3f",
              best_label.c_str(), best.asd_mean, dice_only->second.asd_mean,
              best.dice_mean, dice_only->second.dice_mean)};
}

// --------------------------------------------------------------------------
// 10. determinism: the shipped standard experiment re-runs byte-identically
// --------------------------------------------------------------------------
Outcome determinism() {
  const ExperimentConfig cfg =
      load_experiment_config(g_configs_dir + "/standard.json");
  if (cfg.num_train != 20 || cfg.num_val != 8 || cfg.runs.size() != 2 ||
      cfg.seeds.size() != 3) {
    return {false, "standard.json does not match the shipped shape"};
  }
  const ExperimentReport r1 = run_experiment(cfg, g_work_dir + "/det1");
  const ExperimentReport r2 = run_experiment(cfg, g_work_dir + "/det2");
  const std::string csv1 = slurp(g_work_dir + "/det1/report.csv");
  const std::string csv2 = slurp(g_work_dir + "/det2/report.csv");
  if (csv1.empty()) return {false, "empty csv"};
  if (csv1 != csv2) return {false, "csv differs between runs"};
  const std::size_t expected_rows = 2 * 3 * 8;
  if (r1.rows.size() != expected_rows) {
    return {false, fmt("expected %zu rows, got %zu", expected_rows, r1.rows.size())};
  }
  return {true, fmt("byte-identical csv, %zu case rows", r1.rows.size())};
}

// --------------------------------------------------------------------------
// 11. file format round trip and the three documented header errors
// --------------------------------------------------------------------------
Outcome io_roundtrip() {
  const std::string dir = g_work_dir + "/io";
  std::filesystem::create_directories(dir);

  SplitMix64 rng(0x10);
  Volume v = oracle::random_volume({7, 5, 3}, rng);
  v.spacing = {0.5, 1.0, 2.5};
  write_volume(dir + "/v.vol3", v);
  const Volume r = read_volume(dir + "/v.vol3");
  if (r.data != v.data || r.dims != v.dims || r.spacing != v.spacing) {
    return {false, "round trip not bitwise"};
  }
  // a second write of the read volume is byte-identical on disk
  write_volume(dir + "/v2.vol3", r);
  if (slurp(dir + "/v.vol3") != slurp(dir + "/v2.vol3")) {
    return {false, "file bytes differ after rewrite"};
  }

  const std::string good = slurp(dir + "/v.vol3");
  {
    std::string bad = good;
    bad[0] = 'X';
    std::ofstream(dir + "/magic.vol3", std::ios::binary) << bad;
  }
  {
    std::string bad = good.substr(0, good.size() - 4);
    std::ofstream(dir + "/trunc.vol3", std::ios::binary) << bad;
  }
  {
    std::string bad = good;
    bad[44] = 7;
    std::ofstream(dir + "/dtype.vol3", std::ios::binary) << bad;
  }
  struct CaseSpec {
    const char* file;
    VolumeIoErrorKind kind;
  };
  const CaseSpec cases[] = {
      {"magic.vol3", VolumeIoErrorKind::MagicMismatch},
      {"trunc.vol3", VolumeIoErrorKind::TruncatedPayload},
      {"dtype.vol3", VolumeIoErrorKind::UnsupportedDtype},
  };
  for (const auto& c : cases) {
    try {
      read_volume(dir + "/" + c.file);
      return {false, fmt("%s did not raise", c.file)};
    } catch (const VolumeIoError& e) {
      if (e.kind != c.kind) return {false, fmt("%s raised wrong kind", c.file)};
    }
  }
  return {true, "bitwise round trip; 3 distinct header errors"};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--configs") == 0) g_configs_dir = argv[i + 1];
    if (std::strcmp(argv[i], "--workdir") == 0) g_work_dir = argv[i + 1];
  }
  std::filesystem::create_directories(g_work_dir);

  run_criterion("convolution-oracle", 1.0, convolution_oracle);
  run_criterion("filter-structure", 1.0, filter_structure);
  run_criterion("adjoint-identity", 1.0, adjoint_identity);
  run_criterion("gradient-suite", 30.0, gradient_suite);
  run_criterion("edt-oracle", 10.0, edt_oracle);
  run_criterion("eq2-identities", 30.0, eq2_identities);
  run_criterion("dice-degeneracy", 60.0, dice_degeneracy);
  run_criterion("overfit-smoke", 120.0, overfit_smoke);
  run_criterion("directional-experiment", 1200.0, directional_experiment);
  run_criterion("determinism", 1200.0, determinism);
  run_criterion("io-roundtrip", 10.0, io_roundtrip);

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
