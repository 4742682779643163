// Command-line front end: train model pairs, measure interpolation
// barriers, run layer diagnostics and Monte Carlo probes, and emit
// figure-ready CSV/JSON. Every run is deterministic given its flags; the
// data artifacts from identical configs are byte-identical.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lmc/pipeline.hpp"
#include "lmc/report_io.hpp"
#include "lmc/symmetry.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

void add_experiment_flags(CLI::App* cmd, lmc::ExperimentConfig& cfg,
                          std::string& perm_mode) {
  cmd->set_config("--config", "", "Read options from a key=value file");
  cmd->add_option("--dataset", cfg.data.name,
                  "Dataset: blobs, mnist or fmnist");
  cmd->add_option("--train-images", cfg.data.train_images,
                  "IDX image file (train split)");
  cmd->add_option("--train-labels", cfg.data.train_labels,
                  "IDX label file (train split)");
  cmd->add_option("--test-images", cfg.data.test_images,
                  "IDX image file (test split)");
  cmd->add_option("--test-labels", cfg.data.test_labels,
                  "IDX label file (test split)");
  cmd->add_option("--blob-train", cfg.data.blob_train, "Blob train size");
  cmd->add_option("--blob-test", cfg.data.blob_test, "Blob test size");
  cmd->add_option("--blob-dim", cfg.data.blob_dim, "Blob input dimension");
  cmd->add_option("--blob-classes", cfg.data.blob_classes, "Blob classes");
  cmd->add_option("--blob-sep", cfg.data.blob_sep, "Blob mean separation");
  cmd->add_option("--blob-seed", cfg.data.blob_seed, "Blob data seed");
  cmd->add_option("--hidden", cfg.hidden_dims, "Hidden layer dims");
  cmd->add_flag("!--no-bias", cfg.with_bias, "Train bias-free models");
  cmd->add_option("--multipliers", cfg.multipliers, "Width multipliers");
  cmd->add_option("--seeds", cfg.seeds, "Training seeds (paired in order)");
  cmd->add_option("--lr", cfg.train.lr, "Adam learning rate");
  cmd->add_option("--weight-decay", cfg.train.weight_decay, "Weight decay");
  cmd->add_flag("--decoupled-decay", cfg.train.decoupled_decay,
                "Decouple weight decay from the gradient");
  cmd->add_option("--batch-size", cfg.train.batch_size, "Batch size");
  cmd->add_option("--epochs", cfg.train.epochs, "Epochs");
  cmd->add_option("--beta1", cfg.train.adam_beta1, "Adam beta1");
  cmd->add_option("--beta2", cfg.train.adam_beta2, "Adam beta2");
  cmd->add_option("--adam-eps", cfg.train.adam_eps, "Adam epsilon");
  cmd->add_option("--grid", cfg.lambda_grid, "Interpolation grid size");
  cmd->add_option("--calibration-fraction", cfg.calibration_fraction,
                  "Test fraction used to fit the inverse temperature");
  cmd->add_option("--calibration-seed", cfg.calibration_seed,
                  "Seed of the calibration split");
  cmd->add_option("--perm-mode", perm_mode,
                  "Permutation treatment: none, random or weight_match");
  cmd->add_option("--perm-seed", cfg.perm_seed, "Permutation seed");
  cmd->add_option_function<std::string>(
         "--cosine-agg",
         [&cfg](const std::string& v) {
           if (v == "per_sample") {
             cfg.cosine_aggregation = lmc::CosineAggregation::per_sample_mean;
           } else if (v == "concat") {
             cfg.cosine_aggregation = lmc::CosineAggregation::concatenated;
           } else {
             throw CLI::ValidationError("--cosine-agg",
                                        "expected per_sample or concat");
           }
         },
         "Cosine aggregation: per_sample (default) or concat");
  cmd->add_option_function<std::string>(
         "--overlap-mode",
         [&cfg](const std::string& v) {
           if (v == "min") {
             cfg.overlap_mode = lmc::OverlapMode::min_normalized;
           } else if (v == "jaccard") {
             cfg.overlap_mode = lmc::OverlapMode::jaccard_distance;
           } else {
             throw CLI::ValidationError("--overlap-mode",
                                        "expected min or jaccard");
           }
         },
         "Non-overlap normalization: min (default) or jaccard");
  cmd->add_option("--out", cfg.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear mode connectivity laboratory"};
  app.set_version_flag("--version", std::string(lmc::kToolVersion));
  app.set_config("--config", "", "Read options from an ini-style file");
  app.require_subcommand(1);

  lmc::ExperimentConfig cfg;
  if (const char* env_out = std::getenv("LMC_OUT_DIR")) {
    cfg.out_dir = env_out;
  }
  std::string perm_mode = "none";
  double diag_lambda = 0.5;
  std::string ckpt_a, ckpt_b;
  std::string perm_action, perm_file, ckpt_in, ckpt_out;

  lmc::TheoryConfig theory;
  if (const char* env_out = std::getenv("LMC_OUT_DIR")) {
    theory.out_dir = env_out;
  }

  CLI::App* c_train = app.add_subcommand(
      "train", "Train one checkpoint per (multiplier, seed)");
  add_experiment_flags(c_train, cfg, perm_mode);

  CLI::App* c_barrier = app.add_subcommand(
      "barrier", "Interpolation losses between two checkpoints");
  add_experiment_flags(c_barrier, cfg, perm_mode);
  c_barrier->add_option("checkpoint_a", ckpt_a, "First checkpoint")
      ->required();
  c_barrier->add_option("checkpoint_b", ckpt_b, "Second checkpoint")
      ->required();

  CLI::App* c_diagnose = app.add_subcommand(
      "diagnose", "Per-layer diagnostics for a checkpoint pair");
  add_experiment_flags(c_diagnose, cfg, perm_mode);
  c_diagnose->add_option("checkpoint_a", ckpt_a, "First checkpoint")
      ->required();
  c_diagnose->add_option("checkpoint_b", ckpt_b, "Second checkpoint")
      ->required();
  c_diagnose->add_option("--lambda", diag_lambda, "Merge coefficient");

  CLI::App* c_theory = app.add_subcommand(
      "theory", "Monte Carlo probes of the Gaussian/ReLU results");
  c_theory->set_config("--config", "", "Read options from a key=value file");
  c_theory->add_option("--probes", theory.probes,
                       "Probes: relu-product, cosine, bound");
  c_theory->add_option("--rhos", theory.rhos, "Correlations for relu-product");
  c_theory->add_option("--samples", theory.mc_samples, "MC sample count");
  c_theory->add_option("--d", theory.cosine_dim, "Cosine probe dimension");
  c_theory->add_option("--trials", theory.cosine_trials, "Cosine trials");
  c_theory->add_option("--delta", theory.bound_delta, "Bound delta");
  c_theory->add_option("--c", theory.bound_c, "Bernstein constant c");
  c_theory->add_option("--seed", theory.seed, "Probe seed");
  c_theory->add_option("--out", theory.out_dir, "Output directory");

  CLI::App* c_sweep = app.add_subcommand(
      "sweep", "Width sweep over seed pairs with aggregated statistics");
  add_experiment_flags(c_sweep, cfg, perm_mode);

  CLI::App* c_perm = app.add_subcommand(
      "perm", "Permutation utilities: search, apply, random");
  add_experiment_flags(c_perm, cfg, perm_mode);
  c_perm->add_option("action", perm_action, "search | apply | random")
      ->required();
  c_perm->add_option("checkpoint_a", ckpt_a, "First checkpoint")->required();
  c_perm->add_option("checkpoint_b", ckpt_b,
                     "Second checkpoint (search) or omitted");
  c_perm->add_option("--perm-file", perm_file, "Permutation sidecar path");
  c_perm->add_option("--ckpt-out", ckpt_out, "Output checkpoint (apply)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  try {
    cfg.perm_mode = lmc::perm_mode_from_string(perm_mode);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (c_train->parsed()) {
      const auto res = lmc::cmd_train(cfg);
      for (const auto& p : res.checkpoint_paths) std::cout << p << "\n";
    } else if (c_barrier->parsed()) {
      const auto res = lmc::cmd_barrier(cfg, ckpt_a, ckpt_b);
      std::cout << res.csv_path << "\n" << res.json_path << "\n";
      std::cout << "barrier_raw_test "
                << lmc::format_double(res.curve.barrier_raw_test) << "\n";
      std::cout << "barrier_calibrated "
                << lmc::format_double(res.curve.barrier_calibrated) << "\n";
    } else if (c_diagnose->parsed()) {
      const auto res = lmc::cmd_diagnose(cfg, ckpt_a, ckpt_b, diag_lambda);
      std::cout << res.json_path << "\n";
    } else if (c_theory->parsed()) {
      const auto res = lmc::cmd_theory(theory);
      std::cout << res.json_path << "\n";
    } else if (c_sweep->parsed()) {
      const auto res = lmc::cmd_sweep(cfg);
      std::cout << res.csv_path << "\n" << res.json_path << "\n";
    } else if (c_perm->parsed()) {
      const lmc::Checkpoint ca = lmc::load_checkpoint(ckpt_a);
      if (perm_action == "search") {
        if (ckpt_b.empty()) {
          std::cerr << "config error: search needs two checkpoints\n";
          return kExitConfigError;
        }
        const lmc::Checkpoint cb = lmc::load_checkpoint(ckpt_b);
        lmc::Rng rng(cfg.perm_seed);
        const auto wm = lmc::weight_match(ca.params, cb.params, rng);
        const std::string out =
            perm_file.empty() ? ckpt_b + ".lmcp" : perm_file;
        lmc::save_permutation(wm.perm, out);
        std::cout << out << "\n";
        std::cout << "sweeps " << wm.sweeps << "\n";
        std::cout << "distance "
                  << lmc::format_double(wm.sweep_distances.back()) << "\n";
      } else if (perm_action == "apply") {
        if (perm_file.empty() || ckpt_out.empty()) {
          std::cerr << "config error: apply needs --perm-file and --ckpt-out\n";
          return kExitConfigError;
        }
        const lmc::Permutation pi = lmc::load_permutation(perm_file);
        lmc::Checkpoint out = ca;
        out.params = lmc::apply(pi, ca.params);
        lmc::save_checkpoint(out, ckpt_out);
        std::cout << ckpt_out << "\n";
      } else if (perm_action == "random") {
        lmc::Rng rng(cfg.perm_seed);
        const auto pi = lmc::random_permutation(ca.params.arch, rng);
        const std::string out =
            perm_file.empty() ? ckpt_a + ".lmcp" : perm_file;
        lmc::save_permutation(pi, out);
        std::cout << out << "\n";
      } else {
        std::cerr << "config error: unknown perm action " << perm_action
                  << " (search | apply | random)\n";
        return kExitConfigError;
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}
