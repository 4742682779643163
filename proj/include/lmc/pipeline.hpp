#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmc/connectivity.hpp"
#include "lmc/dataio.hpp"
#include "lmc/symmetry.hpp"
#include "lmc/trainer.hpp"

namespace lmc {

enum class PermMode { none, random, weight_match };

std::string to_string(PermMode mode);
PermMode perm_mode_from_string(const std::string& s);

/// Where the data comes from: synthetic blobs by default, or IDX files.
struct DatasetSpec {
  std::string name = "blobs";  // "blobs" | "mnist" | "fmnist"
  // IDX paths (used when name != "blobs"):
  std::string train_images, train_labels, test_images, test_labels;
  // blob parameters:
  std::size_t blob_train = 4096;
  std::size_t blob_test = 2048;
  std::size_t blob_dim = 20;
  std::size_t blob_classes = 8;
  double blob_sep = 3.0;
  std::uint64_t blob_seed = 7;
};

struct ExperimentConfig {
  DatasetSpec data;
  std::vector<std::size_t> hidden_dims = {512, 512, 512};
  bool with_bias = true;
  std::vector<double> multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<std::uint64_t> seeds = {1, 2};
  TrainConfig train;  // width_multiplier/seed overridden per cell
  std::size_t lambda_grid = 25;
  double calibration_fraction = 0.2;
  std::uint64_t calibration_seed = 9001;
  PermMode perm_mode = PermMode::none;
  std::uint64_t perm_seed = 41;
  CosineAggregation cosine_aggregation = CosineAggregation::per_sample_mean;
  OverlapMode overlap_mode = OverlapMode::min_normalized;
  std::string out_dir = "out";

  void validate() const;
  /// Canonical key=value dump; its FNV-1a hash keys caching and manifests.
  std::string canonical_text() const;
  std::string config_hash() const;
};

struct TrainedPair {
  Checkpoint a;
  Checkpoint b;
};

/// Train-or-load with caching keyed by the cell hash; returns the
/// checkpoint path and whether the cache was hit.
struct TrainCell {
  std::string path;
  bool cache_hit = false;
  Checkpoint checkpoint;
};

TrainCell train_cell(const ExperimentConfig& cfg, const Dataset& train_set,
                     const Dataset& test_set, double multiplier,
                     std::uint64_t seed);

/// Loads (or synthesizes) the train/test datasets named by cfg.data.
std::pair<Dataset, Dataset> resolve_datasets(const DatasetSpec& spec);

Arch base_arch(const ExperimentConfig& cfg, const Dataset& train_set);

struct ManifestStage {
  std::string name;
  double seconds = 0.0;
};

/// Run manifest: config hash, artifact paths, tool version, per-stage
/// wall-clock. Timings vary run to run, so the manifest sits outside the
/// byte-identical guarantee that covers every data artifact.
struct RunManifest {
  std::string config_hash;
  std::vector<std::string> artifacts;
  std::vector<ManifestStage> stages;
  std::vector<std::string> notes;

  std::string to_json() const;
  void write(const std::string& path) const;
};

struct CmdTrainResult {
  std::vector<std::string> checkpoint_paths;
  RunManifest manifest;
};

CmdTrainResult cmd_train(const ExperimentConfig& cfg);

struct CmdBarrierResult {
  BarrierCurve curve;
  std::string csv_path;
  std::string json_path;
  std::vector<std::string> perm_paths;  // empty when perm_mode == none
  RunManifest manifest;
};

CmdBarrierResult cmd_barrier(const ExperimentConfig& cfg,
                             const std::string& checkpoint_a,
                             const std::string& checkpoint_b);

struct CmdDiagnoseResult {
  DiagnosticsReport report;
  std::string json_path;
  RunManifest manifest;
};

CmdDiagnoseResult cmd_diagnose(const ExperimentConfig& cfg,
                               const std::string& checkpoint_a,
                               const std::string& checkpoint_b, double lambda);

struct TheoryConfig {
  std::vector<std::string> probes = {"relu-product", "cosine", "bound"};
  std::vector<double> rhos = {-0.9, -0.5, 0.0, 0.5, 0.9};
  std::size_t mc_samples = 1000000;
  std::size_t cosine_dim = 1000000;
  std::size_t cosine_trials = 20;
  double bound_delta = 0.05;
  double bound_c = 1.0;
  std::uint64_t seed = 2024;
  std::string out_dir = "out";
};

struct CmdTheoryResult {
  std::string json_path;
  std::string json_text;
  RunManifest manifest;
};

CmdTheoryResult cmd_theory(const TheoryConfig& cfg);

/// One sweep row: statistics over seed pairs at a fixed width multiplier.
struct SweepRow {
  double multiplier = 0.0;
  std::size_t n_pairs = 0;
  double acc_gap_mean = 0.0, acc_gap_std = 0.0;
  double barrier_raw_mean = 0.0, barrier_raw_std = 0.0;
  double barrier_cal_mean = 0.0, barrier_cal_std = 0.0;
  double lewc_last_cos_mean = 0.0, lewc_last_cos_std = 0.0;
  double eps_rank_over_width_mean = 0.0;
};

struct CmdSweepResult {
  std::vector<SweepRow> rows;
  std::string csv_path;
  std::string json_path;
  RunManifest manifest;
};

CmdSweepResult cmd_sweep(const ExperimentConfig& cfg);

}  // namespace lmc
