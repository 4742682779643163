#include "lmc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "lmc/ndcore.hpp"
#include "lmc/report_io.hpp"
#include "lmc/theoryprobe.hpp"

namespace lmc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string to_string(PermMode mode) {
  switch (mode) {
    case PermMode::none: return "none";
    case PermMode::random: return "random";
    case PermMode::weight_match: return "weight_match";
  }
  return "none";
}

PermMode perm_mode_from_string(const std::string& s) {
  if (s == "none") return PermMode::none;
  if (s == "random") return PermMode::random;
  if (s == "weight_match" || s == "wm") return PermMode::weight_match;
  throw std::invalid_argument("unknown permutation mode: " + s);
}

void ExperimentConfig::validate() const {
  require(!multipliers.empty(), "config: need at least one width multiplier");
  require(seeds.size() >= 2, "config: need at least two seeds for pairing");
  require(!hidden_dims.empty(), "config: need at least one hidden dim");
  require(lambda_grid >= 2, "config: lambda grid needs >= 2 points");
  require(calibration_fraction > 0.0 && calibration_fraction < 1.0,
          "config: calibration fraction must lie in (0,1)");
  train.validate();
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream s;
  s << "data.name=" << data.name << "\n";
  if (data.name == "blobs") {
    s << "data.blob_train=" << data.blob_train << "\n";
    s << "data.blob_test=" << data.blob_test << "\n";
    s << "data.blob_dim=" << data.blob_dim << "\n";
    s << "data.blob_classes=" << data.blob_classes << "\n";
    s << "data.blob_sep=" << format_double(data.blob_sep) << "\n";
    s << "data.blob_seed=" << data.blob_seed << "\n";
  } else {
    s << "data.train_images=" << data.train_images << "\n";
    s << "data.train_labels=" << data.train_labels << "\n";
    s << "data.test_images=" << data.test_images << "\n";
    s << "data.test_labels=" << data.test_labels << "\n";
  }
  s << "arch.hidden=";
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    s << (i ? "," : "") << hidden_dims[i];
  }
  s << "\narch.with_bias=" << (with_bias ? 1 : 0) << "\n";
  s << "multipliers=";
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    s << (i ? "," : "") << format_double(multipliers[i]);
  }
  s << "\nseeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    s << (i ? "," : "") << seeds[i];
  }
  s << "\ntrain.lr=" << format_double(train.lr) << "\n";
  s << "train.weight_decay=" << format_double(train.weight_decay) << "\n";
  s << "train.decoupled_decay=" << (train.decoupled_decay ? 1 : 0) << "\n";
  s << "train.batch_size=" << train.batch_size << "\n";
  s << "train.epochs=" << train.epochs << "\n";
  s << "train.adam_beta1=" << format_double(train.adam_beta1) << "\n";
  s << "train.adam_beta2=" << format_double(train.adam_beta2) << "\n";
  s << "train.adam_eps=" << format_double(train.adam_eps) << "\n";
  s << "lambda_grid=" << lambda_grid << "\n";
  s << "calibration_fraction=" << format_double(calibration_fraction) << "\n";
  s << "calibration_seed=" << calibration_seed << "\n";
  s << "perm_mode=" << to_string(perm_mode) << "\n";
  s << "perm_seed=" << perm_seed << "\n";
  s << "cosine_aggregation="
    << (cosine_aggregation == CosineAggregation::per_sample_mean ? "per_sample"
                                                                 : "concat")
    << "\n";
  s << "overlap_mode="
    << (overlap_mode == OverlapMode::min_normalized ? "min" : "jaccard")
    << "\n";
  return s.str();
}

std::string ExperimentConfig::config_hash() const {
  return hash_hex(fnv1a64(canonical_text()));
}

std::pair<Dataset, Dataset> resolve_datasets(const DatasetSpec& spec) {
  if (spec.name == "blobs") {
    // One draw covers both splits so they share the class means.
    Rng rng(spec.blob_seed);
    const Dataset all =
        synth_blobs(rng, spec.blob_train + spec.blob_test, spec.blob_dim,
                    spec.blob_classes, spec.blob_sep);
    std::vector<std::size_t> head(spec.blob_train), tail(spec.blob_test);
    for (std::size_t i = 0; i < head.size(); ++i) head[i] = i;
    for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = spec.blob_train + i;
    return {all.subset(head, "blobs-train"), all.subset(tail, "blobs-test")};
  }
  Dataset train = load_idx(spec.train_images, spec.train_labels);
  Dataset test = load_idx(spec.test_images, spec.test_labels);
  train.name = spec.name + "-train";
  test.name = spec.name + "-test";
  // MNIST-family labels always span 10 classes even if a subset is loaded.
  const int classes = std::max(train.num_classes, test.num_classes);
  train.num_classes = classes;
  test.num_classes = classes;
  return {std::move(train), std::move(test)};
}

Arch base_arch(const ExperimentConfig& cfg, const Dataset& train_set) {
  Arch arch;
  arch.layer_dims.push_back(train_set.input_dim());
  for (std::size_t h : cfg.hidden_dims) arch.layer_dims.push_back(h);
  arch.layer_dims.push_back(static_cast<std::size_t>(train_set.num_classes));
  arch.with_bias = cfg.with_bias;
  return arch;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string RunManifest::to_json() const {
  ordered_json j;
  j["schema"] = "lmc-manifest";
  j["version"] = 1;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = config_hash;
  j["artifacts"] = artifacts;
  ordered_json st = ordered_json::array();
  for (const auto& s : stages) {
    st.push_back({{"name", s.name}, {"seconds", s.seconds}});
  }
  j["stages"] = st;
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
  for (const auto& a : artifacts) {
    if (!fs::exists(a)) {
      throw std::runtime_error("manifest lists missing artifact: " + a);
    }
  }
  write_text_file(path, to_json());
}

namespace {

struct StageTimer {
  RunManifest& manifest;
  std::string name;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  StageTimer(RunManifest& m, std::string n) : manifest(m), name(std::move(n)) {}
  ~StageTimer() {
    const auto dt = std::chrono::steady_clock::now() - start;
    manifest.stages.push_back(
        {name, std::chrono::duration<double>(dt).count()});
  }
};

std::string multiplier_tag(double m) {
  std::ostringstream s;
  s << m;
  std::string tag = s.str();
  std::replace(tag.begin(), tag.end(), '.', 'p');
  return tag;
}

/// Keyed by exactly what determines the trained model, so sweeps, barrier
/// runs and ablations reuse each other's checkpoints.
std::string cell_hash(const ExperimentConfig& cfg, double multiplier,
                      std::uint64_t seed) {
  std::ostringstream s;
  s << "data.name=" << cfg.data.name << "\n";
  if (cfg.data.name == "blobs") {
    s << "data.blob=" << cfg.data.blob_train << "," << cfg.data.blob_test
      << "," << cfg.data.blob_dim << "," << cfg.data.blob_classes << ","
      << format_double(cfg.data.blob_sep) << "," << cfg.data.blob_seed << "\n";
  } else {
    s << "data.paths=" << cfg.data.train_images << "," << cfg.data.train_labels
      << "," << cfg.data.test_images << "," << cfg.data.test_labels << "\n";
  }
  s << "arch.hidden=";
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    s << (i ? "," : "") << cfg.hidden_dims[i];
  }
  s << "\narch.with_bias=" << (cfg.with_bias ? 1 : 0) << "\n";
  s << "train=" << format_double(cfg.train.lr) << ","
    << format_double(cfg.train.weight_decay) << ","
    << (cfg.train.decoupled_decay ? 1 : 0) << "," << cfg.train.batch_size
    << "," << cfg.train.epochs << "," << format_double(cfg.train.adam_beta1)
    << "," << format_double(cfg.train.adam_beta2) << ","
    << format_double(cfg.train.adam_eps) << "\n";
  s << "cell.multiplier=" << format_double(multiplier) << "\n";
  s << "cell.seed=" << seed << "\n";
  return hash_hex(fnv1a64(s.str()));
}

}  // namespace

TrainCell train_cell(const ExperimentConfig& cfg, const Dataset& train_set,
                     const Dataset& test_set, double multiplier,
                     std::uint64_t seed) {
  const std::string hash = cell_hash(cfg, multiplier, seed);
  std::ostringstream name;
  name << "ckpt_m" << multiplier_tag(multiplier) << "_s" << seed << "_" << hash
       << ".lmcc";
  TrainCell cell;
  fs::create_directories(cfg.out_dir);
  cell.path = (fs::path(cfg.out_dir) / name.str()).string();

  if (fs::exists(cell.path)) {
    try {
      cell.checkpoint = load_checkpoint(cell.path);
      cell.cache_hit = true;
      return cell;
    } catch (const CheckpointError&) {
      // fall through and retrain over the unreadable file
    }
  }

  TrainConfig tc = cfg.train;
  tc.width_multiplier = multiplier;
  tc.seed = seed;
  const Arch arch = base_arch(cfg, train_set);
  cell.checkpoint = train(arch, tc, train_set, test_set);
  save_checkpoint(cell.checkpoint, cell.path);
  return cell;
}

CmdTrainResult cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  CmdTrainResult res;
  res.manifest.config_hash = cfg.config_hash();

  const auto [train_set, test_set] = resolve_datasets(cfg.data);
  for (double m : cfg.multipliers) {
    StageTimer t(res.manifest, "train_m" + multiplier_tag(m));
    for (std::uint64_t seed : cfg.seeds) {
      const TrainCell cell = train_cell(cfg, train_set, test_set, m, seed);
      res.checkpoint_paths.push_back(cell.path);
      res.manifest.artifacts.push_back(cell.path);
      if (cell.cache_hit) {
        res.manifest.notes.push_back("cache hit: " + cell.path);
      }
    }
  }
  res.manifest.write((fs::path(cfg.out_dir) / "train_manifest.json").string());
  return res;
}

namespace {

/// Applies the configured permutation treatment to a checkpoint pair
/// before interpolation. Returns the sidecar paths written (two for the
/// random mode, where each model gets its own draw).
std::vector<std::string> treat_permutation(const ExperimentConfig& cfg,
                                           ParamSet& a, ParamSet& b,
                                           const std::string& stem) {
  if (cfg.perm_mode == PermMode::none) return {};
  if (cfg.perm_mode == PermMode::random) {
    Rng rng(cfg.perm_seed);
    const Permutation pa = random_permutation(a.arch, rng);
    const Permutation pb = random_permutation(b.arch, rng);
    a = apply(pa, a);
    b = apply(pb, b);
    const std::string path_a =
        (fs::path(cfg.out_dir) / (stem + "_a.lmcp")).string();
    const std::string path_b =
        (fs::path(cfg.out_dir) / (stem + "_b.lmcp")).string();
    save_permutation(pa, path_a);
    save_permutation(pb, path_b);
    return {path_a, path_b};
  }
  const std::string path = (fs::path(cfg.out_dir) / (stem + ".lmcp")).string();
  Rng rng(cfg.perm_seed);
  const WeightMatchResult wm = weight_match(a, b, rng);
  b = apply(wm.perm, b);
  save_permutation(wm.perm, path);
  return {path};
}

}  // namespace

CmdBarrierResult cmd_barrier(const ExperimentConfig& cfg,
                             const std::string& checkpoint_a,
                             const std::string& checkpoint_b) {
  fs::create_directories(cfg.out_dir);
  CmdBarrierResult res;
  res.manifest.config_hash = cfg.config_hash();

  const Checkpoint ca = load_checkpoint(checkpoint_a);
  const Checkpoint cb = load_checkpoint(checkpoint_b);
  require_same_arch(ca.params, cb.params);
  const auto [train_set, test_set] = resolve_datasets(cfg.data);

  ParamSet a = ca.params;
  ParamSet b = cb.params;
  const std::string stem = "barrier_" + to_string(cfg.perm_mode) + "_m" +
                           multiplier_tag(ca.config.width_multiplier) + "_s" +
                           std::to_string(ca.config.seed) + "_s" +
                           std::to_string(cb.config.seed);
  res.perm_paths = treat_permutation(cfg, a, b, stem);

  {
    StageTimer t(res.manifest, "barrier");
    BarrierConfig bc;
    bc.grid = cfg.lambda_grid;
    bc.calibration_fraction = cfg.calibration_fraction;
    bc.calibration_seed = cfg.calibration_seed;
    res.curve = barrier_curve(a, b, train_set, test_set, bc);
  }

  res.csv_path = (fs::path(cfg.out_dir) / (stem + ".csv")).string();
  res.json_path = (fs::path(cfg.out_dir) / (stem + ".json")).string();
  write_text_file(res.csv_path, barrier_csv(res.curve));
  write_text_file(res.json_path,
                  barrier_json(res.curve, to_string(cfg.perm_mode),
                               res.perm_paths));
  res.manifest.artifacts = {res.csv_path, res.json_path};
  for (const auto& pp : res.perm_paths) res.manifest.artifacts.push_back(pp);
  res.manifest.write(
      (fs::path(cfg.out_dir) / (stem + "_manifest.json")).string());
  return res;
}

CmdDiagnoseResult cmd_diagnose(const ExperimentConfig& cfg,
                               const std::string& checkpoint_a,
                               const std::string& checkpoint_b,
                               double lambda) {
  fs::create_directories(cfg.out_dir);
  CmdDiagnoseResult res;
  res.manifest.config_hash = cfg.config_hash();

  const Checkpoint ca = load_checkpoint(checkpoint_a);
  const Checkpoint cb = load_checkpoint(checkpoint_b);
  require_same_arch(ca.params, cb.params);
  const auto [train_set, test_set] = resolve_datasets(cfg.data);
  (void)train_set;

  {
    StageTimer t(res.manifest, "diagnose");
    res.report = diagnostics_report(ca.params, cb.params, lambda, test_set,
                                    cfg.cosine_aggregation, cfg.overlap_mode);
    res.report.width_multiplier = ca.config.width_multiplier;
    res.report.seed_a = ca.config.seed;
    res.report.seed_b = cb.config.seed;
  }

  const std::string stem = "diagnostics_s" + std::to_string(ca.config.seed) +
                           "_s" + std::to_string(cb.config.seed);
  res.json_path = (fs::path(cfg.out_dir) / (stem + ".json")).string();
  write_text_file(res.json_path, diagnostics_json(res.report));
  res.manifest.artifacts = {res.json_path};
  res.manifest.write(
      (fs::path(cfg.out_dir) / (stem + "_manifest.json")).string());
  return res;
}

CmdTheoryResult cmd_theory(const TheoryConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  CmdTheoryResult res;
  RunManifest& manifest = res.manifest;
  manifest.config_hash = hash_hex(fnv1a64([&] {
    std::ostringstream s;
    s << "theory.seed=" << cfg.seed << "\nmc=" << cfg.mc_samples
      << "\ndim=" << cfg.cosine_dim << "\ntrials=" << cfg.cosine_trials
      << "\ndelta=" << format_double(cfg.bound_delta)
      << "\nc=" << format_double(cfg.bound_c) << "\n";
    return s.str();
  }()));

  ordered_json rows = ordered_json::array();
  auto push_mc = [&rows](const std::string& op, ordered_json params,
                         const McResult& r) {
    ordered_json row;
    row["op"] = op;
    row["params"] = std::move(params);
    row["estimate"] = r.estimate;
    row["std_error"] = r.std_error;
    row["n_samples"] = r.n_samples;
    if (r.has_analytic) {
      row["analytic"] = r.analytic;
      row["z_score"] = r.z_score;
    }
    rows.push_back(row);
  };

  for (const std::string& probe : cfg.probes) {
    if (probe == "relu-product") {
      StageTimer t(manifest, "relu-product");
      for (double rho : cfg.rhos) {
        Rng rng = Rng(cfg.seed).derive(fnv1a64("relu" + format_double(rho)));
        const ReluProductMc mc = mc_relu_product(rho, cfg.mc_samples, rng);
        push_mc("relu_product", {{"rho", rho}}, mc.relu_product);
        push_mc("cross_term_x_abs_y", {{"rho", rho}}, mc.cross_term);
        push_mc("abs_product", {{"rho", rho}}, mc.abs_product);
      }
    } else if (probe == "cosine") {
      StageTimer t(manifest, "cosine");
      Rng rng = Rng(cfg.seed).derive(fnv1a64("cosine"));
      const CosineConcentration cc =
          mc_cosine_concentration(cfg.cosine_dim, cfg.cosine_trials, rng);
      ordered_json row;
      row["op"] = "cosine_concentration";
      row["params"] = {{"d", cfg.cosine_dim}, {"trials", cfg.cosine_trials}};
      row["estimate"] = cc.mean.estimate;
      row["std_error"] = cc.mean.std_error;
      row["analytic"] = cc.analytic_limit;
      row["z_score"] = cc.mean.z_score;
      row["spread"] = cc.spread;
      row["max_abs_dev"] = cc.max_abs_dev;
      row["trials"] = cc.trial_cosines;
      rows.push_back(row);
    } else if (probe == "bound") {
      StageTimer t(manifest, "bound");
      const ConcentrationBound b =
          concentration_bound(cfg.cosine_dim, cfg.bound_delta, cfg.bound_c);
      ordered_json row;
      row["op"] = "concentration_bound";
      row["params"] = {{"d", cfg.cosine_dim},
                       {"delta", cfg.bound_delta},
                       {"c", cfg.bound_c},
                       {"K", kBernsteinK}};
      row["epsilon"] = b.epsilon;
      row["lower"] = std::isinf(b.lower) ? ordered_json(nullptr)
                                         : ordered_json(b.lower);
      row["upper"] = std::isinf(b.upper) ? ordered_json(nullptr)
                                         : ordered_json(b.upper);
      rows.push_back(row);
    } else {
      throw std::invalid_argument(
          "unknown probe: " + probe +
          " (available: relu-product, cosine, bound)");
    }
  }

  ordered_json j;
  j["schema"] = "lmc-theory";
  j["version"] = kTheorySchemaVersion;
  j["rows"] = rows;
  res.json_text = j.dump(2) + "\n";
  res.json_path = (fs::path(cfg.out_dir) / "theory.json").string();
  write_text_file(res.json_path, res.json_text);
  manifest.artifacts = {res.json_path};
  manifest.write((fs::path(cfg.out_dir) / "theory_manifest.json").string());
  return res;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - out.mean) * (x - out.mean);
    out.std_dev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return out;
}

}  // namespace

CmdSweepResult cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  CmdSweepResult res;
  res.manifest.config_hash = cfg.config_hash();

  const auto [train_set, test_set] = resolve_datasets(cfg.data);
  const std::size_t n_pairs = cfg.seeds.size() / 2;
  require(n_pairs >= 1, "sweep: need at least one seed pair");

  for (double m : cfg.multipliers) {
    StageTimer t(res.manifest, "sweep_m" + multiplier_tag(m));
    std::vector<double> acc_gaps, barriers_raw, barriers_cal, lewc_last,
        eps_rank_frac;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const TrainCell cell_a =
          train_cell(cfg, train_set, test_set, m, cfg.seeds[2 * p]);
      const TrainCell cell_b =
          train_cell(cfg, train_set, test_set, m, cfg.seeds[2 * p + 1]);
      res.manifest.artifacts.push_back(cell_a.path);
      res.manifest.artifacts.push_back(cell_b.path);

      ParamSet a = cell_a.checkpoint.params;
      ParamSet b = cell_b.checkpoint.params;
      const std::string stem = "sweep_m" + multiplier_tag(m) + "_p" +
                               std::to_string(p) + "_" +
                               to_string(cfg.perm_mode);
      treat_permutation(cfg, a, b, stem);

      BarrierConfig bc;
      bc.grid = cfg.lambda_grid;
      bc.calibration_fraction = cfg.calibration_fraction;
      bc.calibration_seed = cfg.calibration_seed;
      const BarrierCurve curve = barrier_curve(a, b, train_set, test_set, bc);

      const double acc_end = 0.5 * (curve.endpoint_a().test_acc +
                                    curve.endpoint_b().test_acc);
      double acc_mid = 0.0;
      for (const auto& pt : curve.points) {
        if (pt.lambda == 0.5) acc_mid = pt.test_acc;
      }
      acc_gaps.push_back(acc_end - acc_mid);
      barriers_raw.push_back(curve.barrier_raw_test);
      barriers_cal.push_back(curve.barrier_calibrated);

      const auto lewc = lewc_diagnostic(a, b, 0.5, test_set,
                                        cfg.cosine_aggregation);
      lewc_last.push_back(lewc.back().mean);

      const auto ranks_a = rank_profile(a);
      const auto ranks_b = rank_profile(b);
      double frac = 0.0;
      std::size_t cnt = 0;
      for (const auto* ranks : {&ranks_a, &ranks_b}) {
        for (const auto& r : *ranks) {
          frac += static_cast<double>(r.eps_rank) /
                  static_cast<double>(r.width);
          ++cnt;
        }
      }
      eps_rank_frac.push_back(frac / static_cast<double>(cnt));
    }

    SweepRow row;
    row.multiplier = m;
    row.n_pairs = n_pairs;
    const MeanStd g = mean_std(acc_gaps);
    row.acc_gap_mean = g.mean;
    row.acc_gap_std = g.std_dev;
    const MeanStd br = mean_std(barriers_raw);
    row.barrier_raw_mean = br.mean;
    row.barrier_raw_std = br.std_dev;
    const MeanStd bc_ms = mean_std(barriers_cal);
    row.barrier_cal_mean = bc_ms.mean;
    row.barrier_cal_std = bc_ms.std_dev;
    const MeanStd lw = mean_std(lewc_last);
    row.lewc_last_cos_mean = lw.mean;
    row.lewc_last_cos_std = lw.std_dev;
    row.eps_rank_over_width_mean = mean_std(eps_rank_frac).mean;
    res.rows.push_back(row);
  }

  std::ostringstream csv;
  csv << "multiplier,n_pairs,acc_gap_mean,acc_gap_std,barrier_raw_mean,"
         "barrier_raw_std,barrier_cal_mean,barrier_cal_std,"
         "lewc_last_cos_mean,lewc_last_cos_std,eps_rank_over_width_mean\n";
  ordered_json jrows = ordered_json::array();
  for (const auto& r : res.rows) {
    csv << format_double(r.multiplier) << "," << r.n_pairs << ","
        << format_double(r.acc_gap_mean) << "," << format_double(r.acc_gap_std)
        << "," << format_double(r.barrier_raw_mean) << ","
        << format_double(r.barrier_raw_std) << ","
        << format_double(r.barrier_cal_mean) << ","
        << format_double(r.barrier_cal_std) << ","
        << format_double(r.lewc_last_cos_mean) << ","
        << format_double(r.lewc_last_cos_std) << ","
        << format_double(r.eps_rank_over_width_mean) << "\n";
    ordered_json jr;
    jr["multiplier"] = r.multiplier;
    jr["n_pairs"] = r.n_pairs;
    jr["acc_gap_mean"] = r.acc_gap_mean;
    jr["acc_gap_std"] = r.acc_gap_std;
    jr["barrier_raw_mean"] = r.barrier_raw_mean;
    jr["barrier_raw_std"] = r.barrier_raw_std;
    jr["barrier_cal_mean"] = r.barrier_cal_mean;
    jr["barrier_cal_std"] = r.barrier_cal_std;
    jr["lewc_last_cos_mean"] = r.lewc_last_cos_mean;
    jr["lewc_last_cos_std"] = r.lewc_last_cos_std;
    jr["eps_rank_over_width_mean"] = r.eps_rank_over_width_mean;
    jrows.push_back(jr);
  }
  // trend flag: calibrated barrier non-increasing in the multiplier,
  // with one standard deviation of slack
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
    if (res.rows[i + 1].barrier_cal_mean >
        res.rows[i].barrier_cal_mean + res.rows[i].barrier_cal_std) {
      monotone = false;
    }
  }
  ordered_json j;
  j["schema"] = "lmc-sweep";
  j["version"] = 1;
  j["permutation_mode"] = to_string(cfg.perm_mode);
  j["barrier_cal_monotone_within_std"] = monotone;
  j["rows"] = jrows;

  res.csv_path = (fs::path(cfg.out_dir) / "sweep.csv").string();
  res.json_path = (fs::path(cfg.out_dir) / "sweep.json").string();
  write_text_file(res.csv_path, csv.str());
  write_text_file(res.json_path, j.dump(2) + "\n");
  res.manifest.artifacts.push_back(res.csv_path);
  res.manifest.artifacts.push_back(res.json_path);
  res.manifest.write((fs::path(cfg.out_dir) / "sweep_manifest.json").string());
  return res;
}

}  // namespace lmc
