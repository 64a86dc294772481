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
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "volseg/filtering.hpp"
#include "volseg/kernels.hpp"
#include "volseg/pipeline.hpp"

namespace {

using namespace volseg;

int cmd_phantom(const std::string& config_path, const std::string& out_dir,
                std::uint64_t seed_override, bool has_seed) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (has_seed) cfg.dataset_seed = seed_override;
  std::filesystem::create_directories(out_dir);
  const int total = cfg.num_train + cfg.num_val;
  const auto samples = generate_dataset(total, cfg.phantom, cfg.dataset_seed);
  for (int i = 0; i < total; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "case%03d", i);
    write_volume(out_dir + "/" + name + "_image.vol3", samples[i].image);
    write_volume(out_dir + "/" + name + "_mask.vol3",
                 samples[i].mask.volume());
  }
  std::printf("wrote %d samples (image+mask) to %s\n", total, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& mode_filter, std::uint64_t seed_override,
              bool has_seed) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!mode_filter.empty()) {
    std::vector<RunSpec> kept;
    for (const auto& r : cfg.runs) {
      if (r.label == mode_filter || loss_mode_to_string(r.mode) == mode_filter) {
        kept.push_back(r);
      }
    }
    if (kept.empty()) {
      std::fprintf(stderr, "no run matches --mode %s\n", mode_filter.c_str());
      return 2;
    }
    cfg.runs = kept;
  }
  if (has_seed) cfg.seeds = {seed_override};

  const ExperimentReport report = run_experiment(cfg, out_dir);
  std::printf("%-16s %10s %10s %10s\n", "mode", "dice", "asd_mm", "hd95_mm");
  for (const auto& a : report.aggregates) {
    std::printf("%-16s %10.4f %10.4f %10.4f\n", a.label.c_str(), a.dice_mean,
                a.asd_mean, a.hd95_mean);
  }
  std::printf("report: %s/report.csv, %s/report.json\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const auto rows = evaluate_saved_predictions(cfg, out_dir);
  std::fputs(report_csv(rows).c_str(), stdout);
  return 0;
}

int cmd_report(const std::string& out_dir) {
  const ExperimentReport report = rederive_report(out_dir);
  std::printf("rewrote %s/report.csv and report.json (%zu case rows)\n",
              out_dir.c_str(), report.rows.size());
  return 0;
}

int cmd_filter(const std::string& input, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  filter_demo(input, out_dir + "/filter");
  std::printf("wrote %s/filter_before.pgm, filter_after.pgm, filter_profile.txt\n",
              out_dir.c_str());
  return 0;
}

// Gradient spot checks on seeded random inputs; prints the max relative
// error per loss and for the net composition.
int cmd_gradcheck(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Dims3 dims{8, 8, 8};
  Volume pred = Volume::create(dims, {1, 1, 1}, 0.0);
  Volume mask_vol = Volume::create(dims, {1, 1, 1}, 0.0);
  for (double& p : pred.data) p = rng.next_uniform(0.05, 0.95);
  for (double& m : mask_vol.data) m = rng.next_double() < 0.4 ? 1.0 : 0.0;
  const BinaryMask target{mask_vol};
  const BeFilter filter = BeFilter::standard();

  struct Entry {
    const char* name;
    double max_rel;
    double bound;
  };
  std::vector<Entry> entries;

  auto run = [&](const char* name, auto&& fn, double step, double bound) {
    const auto rep = check_gradient(fn, pred, step, 50, seed + 1);
    entries.push_back({name, rep.max_rel_error, bound});
  };

  run("soft_dice", [&](const Volume& p) { return soft_dice(p, target); },
      1e-5, 1e-4);
  run("boundary_enhancement",
      [&](const Volume& p) { return boundary_enhancement(p, target, filter); },
      1e-5, 1e-4);
  run("combined(1,1000)",
      [&](const Volume& p) {
        return combined_loss(p, target, LossWeights{1.0, 1000.0}, filter);
      },
      1e-5, 1e-4);
  run("focal(2,0.5)",
      [&](const Volume& p) { return focal_loss(p, target, 2.0, 0.5); }, 1e-5,
      1e-4);
  const Volume phi = signed_distance_map(target);
  run("distance_boundary",
      [&](const Volume& p) { return distance_boundary_loss(p, target, phi); },
      1e-3, 1e-8);

  // net composition: d(loss . forward)/d(params) vs finite differences
  TinyConvNet net = TinyConvNet::init(4, seed + 7);
  Volume image = Volume::create(dims, {1, 1, 1}, 0.0);
  for (double& v : image.data) v = rng.next_uniform(0.0, 1.0);
  auto net_loss = [&](const TinyConvNet& n) {
    return soft_dice(net_forward(n, image), target).value;
  };
  ForwardCache cache;
  const Volume prob = net_forward(net, image, &cache);
  const LossResult base = soft_dice(prob, target);
  const NetGradients grads = net_backward(net, cache, base.grad);
  std::vector<double> flat_params = flatten_params(net);
  const std::vector<double> flat_grads = flatten_grads(grads);
  double max_rel = 0.0;
  SplitMix64 pick(seed + 9);
  std::vector<bool> seen(flat_params.size(), false);
  for (int s = 0; s < 50; ++s) {
    std::size_t i = pick.next_below(flat_params.size());
    while (seen[i]) i = pick.next_below(flat_params.size());
    seen[i] = true;
    const double saved = flat_params[i];
    const double step = 1e-5;
    TinyConvNet probe = net;
    flat_params[i] = saved + step;
    unflatten_params(probe, flat_params);
    const double up = net_loss(probe);
    flat_params[i] = saved - step;
    unflatten_params(probe, flat_params);
    const double down = net_loss(probe);
    flat_params[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::fabs(fd), std::fabs(flat_grads[i]), 1e-6});
    max_rel = std::max(max_rel, std::fabs(fd - flat_grads[i]) / denom);
  }
  entries.push_back({"net_composition", max_rel, 1e-4});

  bool ok = true;
  std::printf("%-22s %14s %10s\n", "loss", "max_rel_err", "bound");
  for (const auto& e : entries) {
    const bool pass = e.max_rel <= e.bound;
    ok = ok && pass;
    std::printf("%-22s %14.3e %10.0e  %s\n", e.name, e.max_rel, e.bound,
                pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volumetric segmentation loss toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", mode_filter, input_path;
  std::uint64_t seed = 0;

  auto* phantom = app.add_subcommand("phantom", "generate a phantom dataset");
  phantom->add_option("--config", config_path)->required();
  phantom->add_option("--out", out_dir);
  auto* phantom_seed = phantom->add_option("--seed", seed);

  auto* train = app.add_subcommand("train", "run the configured experiment");
  train->add_option("--config", config_path)->required();
  train->add_option("--out", out_dir);
  train->add_option("--mode", mode_filter, "restrict to one run label/mode");
  auto* train_seed = train->add_option("--seed", seed);

  auto* eval = app.add_subcommand("eval", "score saved predictions");
  eval->add_option("--config", config_path)->required();
  eval->add_option("--out", out_dir);

  auto* report = app.add_subcommand("report", "re-derive report from saved predictions");
  report->add_option("--out", out_dir);

  auto* filter = app.add_subcommand("filter", "boundary filter demo slices");
  filter->add_option("input", input_path, ".vol3 volume")->required();
  filter->add_option("--out", out_dir);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(phantom)) {
      return cmd_phantom(config_path, out_dir, seed, !phantom_seed->empty());
    }
    if (app.got_subcommand(train)) {
      return cmd_train(config_path, out_dir, mode_filter, seed,
                       !train_seed->empty());
    }
    if (app.got_subcommand(eval)) return cmd_eval(config_path, out_dir);
    if (app.got_subcommand(report)) return cmd_report(out_dir);
    if (app.got_subcommand(filter)) return cmd_filter(input_path, out_dir);
    if (app.got_subcommand(gradcheck)) return cmd_gradcheck(seed == 0 ? 20260808ULL : seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
