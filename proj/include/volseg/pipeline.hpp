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
#include <stdexcept>
#include <string>
#include <vector>

#include "volseg/harness.hpp"
#include "volseg/phantoms.hpp"
#include "volseg/volume.hpp"

namespace volseg {

/// .vol3 on-disk format, fixed little-endian on every platform:
///   8-byte magic "VOL3\0\0\0\x01"
///   3 x u32   dims (nx, ny, nz)
///   3 x f64   spacing, millimeters
///   1 x u32   dtype code (1 = float64)
///   payload   nx*ny*nz doubles, x-fastest order
/// Round trips are bitwise exact.
enum class VolumeIoErrorKind {
  MagicMismatch,
  TruncatedPayload,
  UnsupportedDtype,
  InvalidHeader,
};

class VolumeIoError : public std::runtime_error {
 public:
  VolumeIoError(VolumeIoErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  VolumeIoErrorKind kind;
};

void write_volume(const std::string& path, const Volume& v);
Volume read_volume(const std::string& path);

/// Trilinear resampling onto an isotropic grid with the given spacing.
/// New dims are max(1, round(dim * spacing / target)); samples outside the
/// source grid clamp to the nearest voxel. A target equal to the current
/// isotropic spacing returns the volume unchanged.
Volume resample_isotropic(const Volume& v, double target_mm);

/// Maps intensities to [0,1] by the (lo_pct, hi_pct) percentiles of the
/// foreground voxels (linear interpolation between order statistics at
/// rank pct/100*(n-1)), clamping. Degenerate equal percentiles send values
/// equal to them to 0.5.
Volume percentile_normalize(const Volume& v, const BinaryMask& fg,
                            double lo_pct = 5.0, double hi_pct = 95.0);

/// Shifts and scales to mean 0, population standard deviation 1. Throws on
/// a constant volume.
Volume zscore_normalize(const Volume& v);

/// One training run: a label for reporting, the loss mode, and weights.
struct RunSpec {
  std::string label;
  LossMode mode = LossMode::Dice;
  double lambda1 = 1.0;
  double lambda2 = 0.0;
};

struct ExperimentConfig {
  PhantomSpec phantom;        ///< template; per-sample jitter on top
  int num_train = 20;
  int num_val = 8;
  std::uint64_t dataset_seed = 0;
  TrainConfig train;          ///< mode/weights/seed overridden per run
  std::vector<RunSpec> runs;
  std::vector<std::uint64_t> seeds;
  bool export_slices = false;
};

/// Strict parse: unknown keys anywhere are an error, as are missing
/// required keys. Keys mirror the field names.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

struct CaseRow {
  std::string case_id;
  std::string mode;  ///< run label
  std::uint64_t seed = 0;
  double dice = 0.0;
  double hd95_mm = 0.0;
  double asd_mm = 0.0;
};

struct RunAggregate {
  std::string label;
  double dice_mean = 0.0, dice_stddev = 0.0;
  double asd_mean = 0.0, asd_stddev = 0.0;
  double hd95_mean = 0.0, hd95_stddev = 0.0;
};

struct ExperimentReport {
  std::string config_json;  ///< echo of the effective config
  std::vector<CaseRow> rows;
  std::vector<RunAggregate> aggregates;
  /// loss curves per (run, seed), serialized into report.json
  struct Curve {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
  };
  std::vector<Curve> curves;
};

/// Generates the seeded dataset, trains every (run, seed) pair, evaluates
/// the validation split with sliding-window inference and threshold 0.5,
/// writes report.json + report.csv + per-case prediction volumes under
/// out_dir. Pure function of the config.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir);

/// Recomputes metrics from the predictions saved by run_experiment, using
/// the config echoed in out_dir/report.json, and rewrites the report files.
ExperimentReport rederive_report(const std::string& out_dir);

/// Evaluates saved predictions against the config's regenerated validation
/// masks; returns the rows without touching report files.
std::vector<CaseRow> evaluate_saved_predictions(const ExperimentConfig& config,
                                                const std::string& out_dir);

/// CSV with header case_id,mode,seed,dice,hd95_mm,asd_mm and %.6f metrics.
std::string report_csv(const std::vector<CaseRow>& rows);

void write_report_files(const ExperimentReport& report,
                        const std::string& out_dir);

/// Central axial slice of the input and of the boundary band-pass response,
/// as 8-bit binary PGMs (min-max scaled per image), plus a text dump of the
/// central x-profile before and after filtering.
void filter_demo(const std::string& volume_path,
                 const std::string& out_prefix);

/// 8-bit binary PGM (P5, maxval 255), min-max scaled; constant images come
/// out all zero.
void write_pgm_slice(const std::string& path, const Volume& v, int z);

std::string prediction_filename(const std::string& label, std::uint64_t seed,
                                const std::string& case_id);

}  // namespace volseg
