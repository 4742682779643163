#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "lmc/dataio.hpp"
#include "lmc/mlp.hpp"

namespace lmc {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 3e-3;
  bool decoupled_decay = false;  // default couples decay into the gradient
  std::size_t batch_size = 512;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double width_multiplier = 1.0;

  void validate() const;
};

struct Checkpoint {
  ParamSet params;
  TrainConfig config;
  std::string dataset_name;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double final_test_acc = 0.0;
  std::uint32_t format_version = 1;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Training aborted on a non-finite loss.
struct TrainDivergedError : std::runtime_error {
  std::size_t epoch;
  explicit TrainDivergedError(std::size_t e)
      : std::runtime_error("training diverged at epoch " + std::to_string(e)),
        epoch(e) {}
};

/// Checkpoint file problems, distinguishable by code.
struct CheckpointError : std::runtime_error {
  enum class Code { unsupported_version, corrupt_payload, io };
  Code code;
  CheckpointError(Code c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

/// Adam moments plus running bias-correction powers.
struct AdamState {
  Gradient m;
  Gradient v;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  static AdamState init(const ParamSet& p);
};

/// One Adam update in place. Weight decay is coupled (added to the gradient
/// before the moment updates) unless cfg.decoupled_decay is set, in which
/// case it is applied as a separate lr * decay * theta shrink.
void adam_step(ParamSet& params, const Gradient& grad, AdamState& state,
               const TrainConfig& cfg);

/// Full deterministic training run. cfg.width_multiplier scales the hidden
/// dims of base_arch. Throws TrainDivergedError on non-finite loss.
Checkpoint train(const Arch& base_arch, const TrainConfig& cfg,
                 const Dataset& train_set, const Dataset& test_set);

/// Exact mean loss and accuracy over the whole dataset (no sampling).
/// Argmax ties resolve to the lowest class index.
EvalResult evaluate(const ParamSet& p, const Dataset& d);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lmc
