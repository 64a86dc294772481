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
#include "volseg/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "volseg/filtering.hpp"
#include "volseg/rng.hpp"

namespace volseg {

namespace {

constexpr char kMagic[8] = {'V', 'O', 'L', '3', 0, 0, 0, 1};
constexpr std::uint32_t kDtypeFloat64 = 1;
constexpr std::size_t kHeaderSize = 8 + 3 * 4 + 3 * 8 + 4;
constexpr std::size_t kMaxVoxels = std::size_t(1) << 31;

void put_u32le(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64le(std::string& buf, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return std::bit_cast<double>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for write: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_volume(const std::string& path, const Volume& v) {
  std::string buf;
  buf.reserve(kHeaderSize + v.size() * 8);
  buf.append(kMagic, 8);
  for (int a = 0; a < 3; ++a) put_u32le(buf, static_cast<std::uint32_t>(v.dims[a]));
  for (int a = 0; a < 3; ++a) put_f64le(buf, v.spacing[a]);
  put_u32le(buf, kDtypeFloat64);
  for (double d : v.data) put_f64le(buf, d);
  write_file(path, buf);
}

Volume read_volume(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 8) {
    throw VolumeIoError(VolumeIoErrorKind::TruncatedPayload,
                        path + ": file too small for magic");
  }
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw VolumeIoError(VolumeIoErrorKind::MagicMismatch,
                        path + ": magic mismatch");
  }
  if (bytes.size() < kHeaderSize) {
    throw VolumeIoError(VolumeIoErrorKind::TruncatedPayload,
                        path + ": truncated header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  Dims3 dims;
  for (int a = 0; a < 3; ++a) {
    const std::uint32_t d = get_u32le(p + 8 + 4 * a);
    if (d == 0 || d > (1u << 24)) {
      throw VolumeIoError(VolumeIoErrorKind::InvalidHeader,
                          path + ": bad dimension");
    }
    dims[a] = static_cast<int>(d);
  }
  Spacing3 spacing;
  for (int a = 0; a < 3; ++a) {
    spacing[a] = get_f64le(p + 8 + 12 + 8 * a);
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw VolumeIoError(VolumeIoErrorKind::InvalidHeader,
                          path + ": bad spacing");
    }
  }
  const std::uint32_t dtype = get_u32le(p + 8 + 12 + 24);
  if (dtype != kDtypeFloat64) {
    throw VolumeIoError(VolumeIoErrorKind::UnsupportedDtype,
                        path + ": unsupported dtype code " + std::to_string(dtype));
  }
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (n > kMaxVoxels) {
    throw VolumeIoError(VolumeIoErrorKind::InvalidHeader,
                        path + ": volume too large");
  }
  if (bytes.size() != kHeaderSize + n * 8) {
    throw VolumeIoError(VolumeIoErrorKind::TruncatedPayload,
                        path + ": payload size mismatch");
  }
  Volume v = Volume::create(dims, spacing, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    v.data[i] = get_f64le(p + kHeaderSize + 8 * i);
  }
  return v;
}

Volume resample_isotropic(const Volume& v, double target_mm) {
  if (!(target_mm > 0.0)) {
    throw std::invalid_argument("resample_isotropic: target must be > 0");
  }
  if (v.spacing[0] == target_mm && v.spacing[1] == target_mm &&
      v.spacing[2] == target_mm) {
    return v;  // identity grid, exact no-op
  }
  Dims3 nd;
  for (int a = 0; a < 3; ++a) {
    nd[a] = std::max(1, static_cast<int>(std::lround(
                            static_cast<double>(v.dims[a]) * v.spacing[a] /
                            target_mm)));
  }
  Volume out = Volume::create(nd, {target_mm, target_mm, target_mm}, 0.0);

  auto sample_coord = [&](int i, int a) {
    double u = static_cast<double>(i) * target_mm / v.spacing[a];
    return std::clamp(u, 0.0, static_cast<double>(v.dims[a] - 1));
  };
  for (int k = 0; k < nd[2]; ++k) {
    const double uz = sample_coord(k, 2);
    const int z0 = static_cast<int>(uz);
    const int z1 = std::min(z0 + 1, v.dims[2] - 1);
    const double fz = uz - z0;
    for (int j = 0; j < nd[1]; ++j) {
      const double uy = sample_coord(j, 1);
      const int y0 = static_cast<int>(uy);
      const int y1 = std::min(y0 + 1, v.dims[1] - 1);
      const double fy = uy - y0;
      for (int i = 0; i < nd[0]; ++i) {
        const double ux = sample_coord(i, 0);
        const int x0 = static_cast<int>(ux);
        const int x1 = std::min(x0 + 1, v.dims[0] - 1);
        const double fx = ux - x0;
        const double c00 = v.at(x0, y0, z0) * (1.0 - fx) + v.at(x1, y0, z0) * fx;
        const double c10 = v.at(x0, y1, z0) * (1.0 - fx) + v.at(x1, y1, z0) * fx;
        const double c01 = v.at(x0, y0, z1) * (1.0 - fx) + v.at(x1, y0, z1) * fx;
        const double c11 = v.at(x0, y1, z1) * (1.0 - fx) + v.at(x1, y1, z1) * fx;
        const double c0 = c00 * (1.0 - fy) + c10 * fy;
        const double c1 = c01 * (1.0 - fy) + c11 * fy;
        out.at(i, j, k) = c0 * (1.0 - fz) + c1 * fz;
      }
    }
  }
  return out;
}

namespace {

double percentile_sorted(const std::vector<double>& sorted, double pct) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double rank = pct / 100.0 * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

Volume percentile_normalize(const Volume& v, const BinaryMask& fg,
                            double lo_pct, double hi_pct) {
  if (!v.same_dims(fg.volume())) {
    throw std::invalid_argument("percentile_normalize: dims mismatch");
  }
  std::vector<double> values;
  const auto& fgd = fg.volume().data;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (fgd[i] == 1.0) values.push_back(v.data[i]);
  }
  if (values.empty()) {
    throw std::invalid_argument("percentile_normalize: empty foreground");
  }
  std::sort(values.begin(), values.end());
  const double lo = percentile_sorted(values, lo_pct);
  const double hi = percentile_sorted(values, hi_pct);

  Volume out = v;
  if (hi == lo) {
    for (double& x : out.data) x = (x == lo) ? 0.5 : (x < lo ? 0.0 : 1.0);
    return out;
  }
  const double inv = 1.0 / (hi - lo);
  for (double& x : out.data) x = std::clamp((x - lo) * inv, 0.0, 1.0);
  return out;
}

Volume zscore_normalize(const Volume& v) {
  const std::size_t n = v.size();
  if (n < 2) throw std::invalid_argument("zscore_normalize: too few voxels");
  double mean = 0.0;
  for (double x : v.data) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : v.data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  if (var == 0.0) {
    throw std::invalid_argument("zscore_normalize: zero variance");
  }
  const double inv_sd = 1.0 / std::sqrt(var);
  Volume out = v;
  for (double& x : out.data) x = (x - mean) * inv_sd;
  return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::invalid_argument(std::string("config: unknown key \"") +
                                  it.key() + "\" in " + ctx);
    }
  }
}

const json& require_key(const json& obj, const char* key, const char* ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw std::invalid_argument(std::string("config: missing key \"") + key +
                                "\" in " + ctx);
  }
  return *it;
}

template <typename T>
std::array<T, 3> triple(const json& j, const char* ctx) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument(std::string("config: ") + ctx +
                                " must be an array of 3");
  }
  return {j[0].get<T>(), j[1].get<T>(), j[2].get<T>()};
}

PhantomSpec parse_phantom(const json& j) {
  check_keys(j,
             {"shape", "dims", "spacing", "center", "radii", "fuzz_sigma",
              "noise_sigma", "contrast", "seed"},
             "phantom");
  PhantomSpec s;
  s.shape = phantom_shape_from_string(
      require_key(j, "shape", "phantom").get<std::string>());
  s.dims = triple<int>(require_key(j, "dims", "phantom"), "phantom.dims");
  if (j.contains("spacing")) {
    s.spacing = triple<double>(j["spacing"], "phantom.spacing");
  }
  if (j.contains("center")) {
    s.center = triple<double>(j["center"], "phantom.center");
  } else {
    for (int a = 0; a < 3; ++a) s.center[a] = (s.dims[a] - 1) / 2.0;
  }
  s.radii = triple<double>(require_key(j, "radii", "phantom"), "phantom.radii");
  s.fuzz_sigma = require_key(j, "fuzz_sigma", "phantom").get<double>();
  s.noise_sigma = require_key(j, "noise_sigma", "phantom").get<double>();
  if (j.contains("contrast")) {
    const json& c = j["contrast"];
    if (!c.is_array() || c.size() != 2) {
      throw std::invalid_argument("config: phantom.contrast must be [bg, fg]");
    }
    s.contrast_bg = c[0].get<double>();
    s.contrast_fg = c[1].get<double>();
  }
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  return s;
}

TrainConfig parse_train(const json& j) {
  check_keys(j,
             {"epochs", "patch_size", "window_size", "window_overlap", "lr",
              "hidden_channels", "flip_augment", "intensity_shift_augment",
              "intensity_shift_range", "val_interval", "focal_gamma",
              "focal_alpha"},
             "train");
  TrainConfig t;
  t.epochs = require_key(j, "epochs", "train").get<int>();
  t.patch_size = triple<int>(require_key(j, "patch_size", "train"),
                             "train.patch_size");
  t.window_size = triple<int>(require_key(j, "window_size", "train"),
                              "train.window_size");
  t.window_overlap = require_key(j, "window_overlap", "train").get<double>();
  t.lr = require_key(j, "lr", "train").get<double>();
  if (j.contains("hidden_channels")) t.hidden_channels = j["hidden_channels"].get<int>();
  if (j.contains("flip_augment")) t.augment.flip = j["flip_augment"].get<bool>();
  if (j.contains("intensity_shift_augment")) {
    t.augment.intensity_shift = j["intensity_shift_augment"].get<bool>();
  }
  if (j.contains("intensity_shift_range")) {
    t.augment.intensity_shift_range = j["intensity_shift_range"].get<double>();
  }
  if (j.contains("val_interval")) t.val_interval = j["val_interval"].get<int>();
  if (j.contains("focal_gamma")) t.focal_gamma = j["focal_gamma"].get<double>();
  if (j.contains("focal_alpha")) t.focal_alpha = j["focal_alpha"].get<double>();
  return t;
}

double default_lambda2(LossMode m) {
  switch (m) {
    case LossMode::Dice: return 0.0;
    case LossMode::DiceBe: return 1000.0;
    case LossMode::DiceFocal: return 1.0;
    case LossMode::DiceDistance: return 1.0;
  }
  return 0.0;
}

RunSpec parse_run(const json& j) {
  check_keys(j, {"label", "mode", "lambda1", "lambda2"}, "runs[]");
  RunSpec r;
  r.mode = loss_mode_from_string(require_key(j, "mode", "runs[]").get<std::string>());
  r.label = j.contains("label") ? j["label"].get<std::string>()
                                : loss_mode_to_string(r.mode);
  r.lambda1 = j.contains("lambda1") ? j["lambda1"].get<double>() : 1.0;
  r.lambda2 = j.contains("lambda2") ? j["lambda2"].get<double>()
                                    : default_lambda2(r.mode);
  return r;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["phantom"] = {
      {"shape", phantom_shape_to_string(c.phantom.shape)},
      {"dims", c.phantom.dims},
      {"spacing", c.phantom.spacing},
      {"center", c.phantom.center},
      {"radii", c.phantom.radii},
      {"fuzz_sigma", c.phantom.fuzz_sigma},
      {"noise_sigma", c.phantom.noise_sigma},
      {"contrast", {c.phantom.contrast_bg, c.phantom.contrast_fg}},
  };
  j["dataset"] = {
      {"num_train", c.num_train},
      {"num_val", c.num_val},
      {"seed", c.dataset_seed},
  };
  j["train"] = {
      {"epochs", c.train.epochs},
      {"patch_size", c.train.patch_size},
      {"window_size", c.train.window_size},
      {"window_overlap", c.train.window_overlap},
      {"lr", c.train.lr},
      {"hidden_channels", c.train.hidden_channels},
      {"flip_augment", c.train.augment.flip},
      {"intensity_shift_augment", c.train.augment.intensity_shift},
      {"intensity_shift_range", c.train.augment.intensity_shift_range},
      {"val_interval", c.train.val_interval},
      {"focal_gamma", c.train.focal_gamma},
      {"focal_alpha", c.train.focal_alpha},
  };
  j["runs"] = ordered_json::array();
  for (const auto& r : c.runs) {
    j["runs"].push_back({{"label", r.label},
                         {"mode", loss_mode_to_string(r.mode)},
                         {"lambda1", r.lambda1},
                         {"lambda2", r.lambda2}});
  }
  j["seeds"] = c.seeds;
  j["export_slices"] = c.export_slices;
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  check_keys(j, {"phantom", "dataset", "train", "runs", "seeds", "export_slices"},
             "config");
  ExperimentConfig c;
  c.phantom = parse_phantom(require_key(j, "phantom", "config"));
  const json& ds = require_key(j, "dataset", "config");
  check_keys(ds, {"num_train", "num_val", "seed"}, "dataset");
  c.num_train = require_key(ds, "num_train", "dataset").get<int>();
  c.num_val = require_key(ds, "num_val", "dataset").get<int>();
  c.dataset_seed = require_key(ds, "seed", "dataset").get<std::uint64_t>();
  if (c.num_train < 1 || c.num_val < 0) {
    throw std::invalid_argument("config: bad dataset sizes");
  }
  c.train = parse_train(require_key(j, "train", "config"));
  const json& runs = require_key(j, "runs", "config");
  if (!runs.is_array() || runs.empty()) {
    throw std::invalid_argument("config: runs must be a nonempty array");
  }
  for (const auto& r : runs) c.runs.push_back(parse_run(r));
  const json& seeds = require_key(j, "seeds", "config");
  if (!seeds.is_array() || seeds.empty()) {
    throw std::invalid_argument("config: seeds must be a nonempty array");
  }
  for (const auto& s : seeds) c.seeds.push_back(s.get<std::uint64_t>());
  if (j.contains("export_slices")) c.export_slices = j["export_slices"].get<bool>();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path));
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kSplitStream = 0x5917;

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

DatasetSplit generate_split(const ExperimentConfig& c) {
  const int total = c.num_train + c.num_val;
  std::vector<Sample> all = generate_dataset(total, c.phantom, c.dataset_seed);
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  SplitMix64 rng(derive_seed(c.dataset_seed, kSplitStream));
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
  }
  DatasetSplit split;
  for (int i = 0; i < c.num_train; ++i) split.train.push_back(all[idx[i]]);
  for (int i = c.num_train; i < total; ++i) split.val.push_back(all[idx[i]]);
  return split;
}

std::string format_case_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "case%03zu", i);
  return buf;
}

RunAggregate aggregate_rows(const std::string& label,
                            const std::vector<CaseRow>& rows) {
  RunAggregate agg;
  agg.label = label;
  std::vector<double> dice, asd, hd;
  for (const auto& r : rows) {
    if (r.mode != label) continue;
    dice.push_back(r.dice);
    asd.push_back(r.asd_mm);
    hd.push_back(r.hd95_mm);
  }
  auto mean_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
  };
  auto sd_of = [&](const std::vector<double>& v, double m) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  agg.dice_mean = mean_of(dice);
  agg.dice_stddev = sd_of(dice, agg.dice_mean);
  agg.asd_mean = mean_of(asd);
  agg.asd_stddev = sd_of(asd, agg.asd_mean);
  agg.hd95_mean = mean_of(hd);
  agg.hd95_stddev = sd_of(hd, agg.hd95_mean);
  return agg;
}

ordered_json report_to_json(const ExperimentReport& report) {
  ordered_json j;
  j["config"] = ordered_json::parse(report.config_json);
  j["aggregates"] = ordered_json::array();
  for (const auto& a : report.aggregates) {
    j["aggregates"].push_back({{"label", a.label},
                               {"dice_mean", a.dice_mean},
                               {"dice_stddev", a.dice_stddev},
                               {"asd_mean", a.asd_mean},
                               {"asd_stddev", a.asd_stddev},
                               {"hd95_mean", a.hd95_mean},
                               {"hd95_stddev", a.hd95_stddev}});
  }
  j["cases"] = ordered_json::array();
  for (const auto& r : report.rows) {
    j["cases"].push_back({{"case_id", r.case_id},
                          {"mode", r.mode},
                          {"seed", r.seed},
                          {"dice", r.dice},
                          {"hd95_mm", r.hd95_mm},
                          {"asd_mm", r.asd_mm}});
  }
  j["curves"] = ordered_json::array();
  for (const auto& c : report.curves) {
    ordered_json steps = ordered_json::array();
    for (const auto& s : c.steps) {
      steps.push_back({s.epoch, s.step, s.total, s.dice_term, s.aux_term});
    }
    j["curves"].push_back(
        {{"label", c.label}, {"seed", c.seed}, {"steps", std::move(steps)}});
  }
  return j;
}

void export_case_slices(const std::string& out_dir, const std::string& label,
                        std::uint64_t seed, const std::string& case_id,
                        const Volume& prob) {
  const int z = prob.nz() / 2;
  write_pgm_slice(out_dir + "/slice_" + label + "_s" + std::to_string(seed) +
                      "_" + case_id + "_prob.pgm",
                  prob, z);
}

}  // namespace

std::string prediction_filename(const std::string& label, std::uint64_t seed,
                                const std::string& case_id) {
  return "pred_" + label + "_s" + std::to_string(seed) + "_" + case_id +
         ".vol3";
}

std::string report_csv(const std::vector<CaseRow>& rows) {
  std::string out = "case_id,mode,seed,dice,hd95_mm,asd_mm\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%s,%llu,%.6f,%.6f,%.6f\n",
                  r.case_id.c_str(), r.mode.c_str(),
                  static_cast<unsigned long long>(r.seed), r.dice, r.hd95_mm,
                  r.asd_mm);
    out += line;
  }
  return out;
}

void write_report_files(const ExperimentReport& report,
                        const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/report.csv", report_csv(report.rows));
  write_file(out_dir + "/report.json", report_to_json(report).dump(2) + "\n");
}

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  DatasetSplit split = generate_split(config);

  ExperimentReport report;
  report.config_json = config_to_json(config).dump(2);

  for (const auto& run : config.runs) {
    for (std::uint64_t seed : config.seeds) {
      TrainConfig tc = config.train;
      tc.mode = run.mode;
      tc.weights = LossWeights{run.lambda1, run.lambda2};
      tc.seed = seed;
      const TrainResult result = train(split.train, split.val, tc);

      // Final sliding-window predictions, persisted for re-derivation.
      for (std::size_t i = 0; i < split.val.size(); ++i) {
        const std::string case_id = format_case_id(i);
        const Volume prob =
            sliding_window_infer(result.net, split.val[i].image,
                                 tc.window_size, tc.window_overlap);
        write_volume(out_dir + "/" + prediction_filename(run.label, seed, case_id),
                     prob);
        if (config.export_slices && seed == config.seeds.front()) {
          export_case_slices(out_dir, run.label, seed, case_id, prob);
        }
        const BinaryMask pred = threshold(prob, 0.5);
        const MetricsRecord rec = evaluate_case(case_id, pred, split.val[i].mask);
        report.rows.push_back({rec.case_id, run.label, seed, rec.dice,
                               rec.hausdorff95_mm, rec.avg_surface_dist_mm});
      }
      report.curves.push_back({run.label, seed, result.history.steps});
    }
  }
  if (config.export_slices) {
    for (std::size_t i = 0; i < split.val.size(); ++i) {
      const int z = split.val[i].image.nz() / 2;
      write_pgm_slice(out_dir + "/slice_" + format_case_id(i) + "_image.pgm",
                      split.val[i].image, z);
      write_pgm_slice(out_dir + "/slice_" + format_case_id(i) + "_mask.pgm",
                      split.val[i].mask.volume(), z);
    }
  }
  for (const auto& run : config.runs) {
    report.aggregates.push_back(aggregate_rows(run.label, report.rows));
  }
  write_report_files(report, out_dir);
  return report;
}

std::vector<CaseRow> evaluate_saved_predictions(const ExperimentConfig& config,
                                                const std::string& out_dir) {
  DatasetSplit split = generate_split(config);
  std::vector<CaseRow> rows;
  for (const auto& run : config.runs) {
    for (std::uint64_t seed : config.seeds) {
      for (std::size_t i = 0; i < split.val.size(); ++i) {
        const std::string case_id = format_case_id(i);
        const Volume prob = read_volume(
            out_dir + "/" + prediction_filename(run.label, seed, case_id));
        const BinaryMask pred = threshold(prob, 0.5);
        const MetricsRecord rec = evaluate_case(case_id, pred, split.val[i].mask);
        rows.push_back({rec.case_id, run.label, seed, rec.dice,
                        rec.hausdorff95_mm, rec.avg_surface_dist_mm});
      }
    }
  }
  return rows;
}

ExperimentReport rederive_report(const std::string& out_dir) {
  const json previous = json::parse(read_file(out_dir + "/report.json"));
  if (!previous.contains("config")) {
    throw std::invalid_argument("rederive_report: report.json has no config");
  }
  const ExperimentConfig config =
      parse_experiment_config(previous["config"].dump());

  ExperimentReport report;
  report.config_json = config_to_json(config).dump(2);
  report.rows = evaluate_saved_predictions(config, out_dir);
  for (const auto& run : config.runs) {
    report.aggregates.push_back(aggregate_rows(run.label, report.rows));
  }
  if (previous.contains("curves")) {
    for (const auto& c : previous["curves"]) {
      ExperimentReport::Curve curve;
      curve.label = c["label"].get<std::string>();
      curve.seed = c["seed"].get<std::uint64_t>();
      for (const auto& s : c["steps"]) {
        curve.steps.push_back({s[0].get<int>(), s[1].get<int>(),
                               s[2].get<double>(), s[3].get<double>(),
                               s[4].get<double>()});
      }
      report.curves.push_back(std::move(curve));
    }
  }
  write_report_files(report, out_dir);
  return report;
}

// ---------------------------------------------------------------------------
// Filter demo
// ---------------------------------------------------------------------------

void write_pgm_slice(const std::string& path, const Volume& v, int z) {
  if (z < 0 || z >= v.nz()) {
    throw std::invalid_argument("write_pgm_slice: z out of range");
  }
  double lo = v.at(0, 0, z), hi = lo;
  for (int y = 0; y < v.ny(); ++y) {
    for (int x = 0; x < v.nx(); ++x) {
      lo = std::min(lo, v.at(x, y, z));
      hi = std::max(hi, v.at(x, y, z));
    }
  }
  std::string buf = "P5\n" + std::to_string(v.nx()) + " " +
                    std::to_string(v.ny()) + "\n255\n";
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (int y = 0; y < v.ny(); ++y) {
    for (int x = 0; x < v.nx(); ++x) {
      const int g = static_cast<int>(std::lround((v.at(x, y, z) - lo) * scale));
      buf.push_back(static_cast<char>(std::clamp(g, 0, 255)));
    }
  }
  write_file(path, buf);
}

void filter_demo(const std::string& volume_path,
                 const std::string& out_prefix) {
  const Volume v = read_volume(volume_path);
  const Volume filtered = be_filter_apply(BeFilter::standard(), v);
  const int z = v.nz() / 2;
  const int y = v.ny() / 2;

  const auto parent = std::filesystem::path(out_prefix).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);

  write_pgm_slice(out_prefix + "_before.pgm", v, z);
  write_pgm_slice(out_prefix + "_after.pgm", filtered, z);

  std::string profile = "# x before after\n";
  char line[128];
  for (int x = 0; x < v.nx(); ++x) {
    std::snprintf(line, sizeof(line), "%d %.12g %.12g\n", x, v.at(x, y, z),
                  filtered.at(x, y, z));
    profile += line;
  }
  write_file(out_prefix + "_profile.txt", profile);
}

}  // namespace volseg
