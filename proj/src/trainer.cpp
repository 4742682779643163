#include "lmc/trainer.hpp"

#include <zlib.h>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lmc/ndcore.hpp"
#include "lmc/parallel.hpp"

namespace lmc {

void TrainConfig::validate() const {
  require(lr > 0.0, "train config: lr must be positive");
  require(weight_decay >= 0.0, "train config: weight_decay must be >= 0");
  require(batch_size >= 1, "train config: batch_size must be >= 1");
  require(epochs >= 1, "train config: epochs must be >= 1");
  require(width_multiplier > 0.0, "train config: multiplier must be positive");
}

AdamState AdamState::init(const ParamSet& p) {
  AdamState s;
  s.m = zeros_like(p);
  s.v = zeros_like(p);
  return s;
}

namespace {

void adam_update_span(std::span<double> theta, std::span<const double> grad,
                      std::span<double> m, std::span<double> v,
                      const TrainConfig& cfg, double bc1, double bc2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double g = grad[i];
    if (!cfg.decoupled_decay) g += cfg.weight_decay * theta[i];
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    double upd = cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    if (cfg.decoupled_decay) upd += cfg.lr * cfg.weight_decay * theta[i];
    theta[i] -= upd;
  }
}

}  // namespace

void adam_step(ParamSet& params, const Gradient& grad, AdamState& state,
               const TrainConfig& cfg) {
  state.beta1_pow *= cfg.adam_beta1;
  state.beta2_pow *= cfg.adam_beta2;
  const double bc1 = 1.0 - state.beta1_pow;
  const double bc2 = 1.0 - state.beta2_pow;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Matrix& w = params.weights[l];
    parallel_for(w.rows, [&](std::size_t r) {
      adam_update_span(w.row(r), grad.weights[l].row(r), state.m.weights[l].row(r),
                       state.v.weights[l].row(r), cfg, bc1, bc2);
    });
    if (!params.biases.empty()) {
      adam_update_span(params.biases[l].span(), grad.biases[l].span(),
                       state.m.biases[l].span(), state.v.biases[l].span(), cfg,
                       bc1, bc2);
    }
  }
}

EvalResult evaluate(const ParamSet& p, const Dataset& d) {
  require(d.size() > 0, "evaluate: empty dataset");
  require(d.input_dim() == p.arch.input_dim(), "evaluate: input dim mismatch");
  require(static_cast<std::size_t>(d.num_classes) == p.arch.output_dim(),
          "evaluate: class count mismatch");
  const std::size_t n = d.size();
  constexpr std::size_t kBatch = 512;

  std::vector<double> losses(n);
  std::vector<std::uint8_t> correct(n);
  for (std::size_t lo = 0; lo < n; lo += kBatch) {
    const std::size_t hi = std::min(n, lo + kBatch);
    Matrix batch(hi - lo, d.input_dim());
    for (std::size_t s = lo; s < hi; ++s) {
      auto src = d.images.row(s);
      std::copy(src.begin(), src.end(), batch.row(s - lo).begin());
    }
    const ActivationTrace tr = forward_trace(p, batch);
    parallel_for(hi - lo, [&](std::size_t i) {
      const auto logits = tr.logits().row(i);
      const std::size_t label = static_cast<std::size_t>(d.labels[lo + i]);
      losses[lo + i] = softmax_xent(logits, label);
      correct[lo + i] = argmax_lowest(logits) == label ? 1 : 0;
    });
  }
  double loss_sum = 0.0;
  std::size_t n_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    loss_sum += losses[i];
    n_correct += correct[i];
  }
  return {loss_sum / static_cast<double>(n),
          static_cast<double>(n_correct) / static_cast<double>(n)};
}

Checkpoint train(const Arch& base_arch, const TrainConfig& cfg,
                 const Dataset& train_set, const Dataset& test_set) {
  cfg.validate();
  const Arch arch = base_arch.scaled(cfg.width_multiplier);
  arch.validate();
  require(arch.input_dim() == train_set.input_dim(),
          "train: input dim mismatch");
  require(arch.output_dim() == static_cast<std::size_t>(train_set.num_classes),
          "train: output dim must equal class count");

  Rng root(cfg.seed);
  Rng init_rng = root.derive(0);
  Rng shuffle_rng = root.derive(1);

  ParamSet params = init(arch, init_rng);
  AdamState state = AdamState::init(params);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : batches(train_set, cfg.batch_size, shuffle_rng)) {
      Matrix batch(idx.size(), train_set.input_dim());
      std::vector<int> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        auto src = train_set.images.row(idx[i]);
        std::copy(src.begin(), src.end(), batch.row(i).begin());
        labels[i] = train_set.labels[idx[i]];
      }
      const BackwardResult bw = backward(params, batch, labels);
      if (!std::isfinite(bw.mean_loss)) throw TrainDivergedError(epoch);
      adam_step(params, bw.grad, state, cfg);
    }
  }

  Checkpoint c;
  c.params = std::move(params);
  c.config = cfg;
  c.dataset_name = train_set.name;
  c.final_train_loss = evaluate(c.params, train_set).loss;
  const EvalResult test = evaluate(c.params, test_set);
  c.final_test_loss = test.loss;
  c.final_test_acc = test.accuracy;
  return c;
}

// ---------------------------------------------------------------------------
// Checkpoint container: text header, then raw little-endian doubles with a
// CRC32. Round-trips are bit-exact.
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void put_le_doubles(std::string& out, const std::vector<double>& xs) {
  for (double x : xs) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    for (int b = 0; b < 8; ++b) {
      out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
}

double get_le_double(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t(p[b]) << (8 * b);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::string payload;
  for (std::size_t l = 0; l < c.params.weights.size(); ++l) {
    put_le_doubles(payload, c.params.weights[l].data);
    if (!c.params.biases.empty()) put_le_doubles(payload, c.params.biases[l].data);
  }
  const auto crc =
      crc32(0, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size()));

  std::ostringstream h;
  h << "lmc-checkpoint " << kCheckpointVersion << "\n";
  h << "dataset " << c.dataset_name << "\n";
  h << "arch";
  for (std::size_t d : c.params.arch.layer_dims) h << " " << d;
  h << "\n";
  h << "with_bias " << (c.params.arch.with_bias ? 1 : 0) << "\n";
  h << "cfg.lr " << fmt_double(c.config.lr) << "\n";
  h << "cfg.weight_decay " << fmt_double(c.config.weight_decay) << "\n";
  h << "cfg.decoupled_decay " << (c.config.decoupled_decay ? 1 : 0) << "\n";
  h << "cfg.batch_size " << c.config.batch_size << "\n";
  h << "cfg.epochs " << c.config.epochs << "\n";
  h << "cfg.seed " << c.config.seed << "\n";
  h << "cfg.adam_beta1 " << fmt_double(c.config.adam_beta1) << "\n";
  h << "cfg.adam_beta2 " << fmt_double(c.config.adam_beta2) << "\n";
  h << "cfg.adam_eps " << fmt_double(c.config.adam_eps) << "\n";
  h << "cfg.width_multiplier " << fmt_double(c.config.width_multiplier) << "\n";
  h << "metric.final_train_loss " << fmt_double(c.final_train_loss) << "\n";
  h << "metric.final_test_loss " << fmt_double(c.final_test_loss) << "\n";
  h << "metric.final_test_acc " << fmt_double(c.final_test_acc) << "\n";
  h << "payload.count " << payload.size() / 8 << "\n";
  h << "payload.crc32 " << crc << "\n";
  h << "---\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Code::io,
                                  "cannot open for write: " + path);
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw CheckpointError(CheckpointError::Code::io,
                                  "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Code::io,
                                 "cannot open: " + path);

  auto corrupt = [&](const std::string& why) {
    return CheckpointError(CheckpointError::Code::corrupt_payload,
                           path + ": " + why);
  };

  std::string line;
  if (!std::getline(in, line)) throw corrupt("empty file");
  std::istringstream first(line);
  std::string magic;
  std::uint32_t version = 0;
  first >> magic >> version;
  if (magic != "lmc-checkpoint") throw corrupt("not a checkpoint file");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Code::unsupported_version,
                          path + ": unsupported version " +
                              std::to_string(version));
  }

  Checkpoint c;
  Arch arch;
  std::size_t payload_count = 0;
  std::uint64_t crc_expect = 0;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line == "---") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dataset") {
      ls >> c.dataset_name;
    } else if (key == "arch") {
      std::size_t d;
      while (ls >> d) arch.layer_dims.push_back(d);
      ls.clear();  // the dim loop always ends the stream
    } else if (key == "with_bias") {
      int v;
      ls >> v;
      arch.with_bias = v != 0;
    } else if (key == "cfg.lr") {
      ls >> c.config.lr;
    } else if (key == "cfg.weight_decay") {
      ls >> c.config.weight_decay;
    } else if (key == "cfg.decoupled_decay") {
      int v;
      ls >> v;
      c.config.decoupled_decay = v != 0;
    } else if (key == "cfg.batch_size") {
      ls >> c.config.batch_size;
    } else if (key == "cfg.epochs") {
      ls >> c.config.epochs;
    } else if (key == "cfg.seed") {
      ls >> c.config.seed;
    } else if (key == "cfg.adam_beta1") {
      ls >> c.config.adam_beta1;
    } else if (key == "cfg.adam_beta2") {
      ls >> c.config.adam_beta2;
    } else if (key == "cfg.adam_eps") {
      ls >> c.config.adam_eps;
    } else if (key == "cfg.width_multiplier") {
      ls >> c.config.width_multiplier;
    } else if (key == "metric.final_train_loss") {
      ls >> c.final_train_loss;
    } else if (key == "metric.final_test_loss") {
      ls >> c.final_test_loss;
    } else if (key == "metric.final_test_acc") {
      ls >> c.final_test_acc;
    } else if (key == "payload.count") {
      ls >> payload_count;
    } else if (key == "payload.crc32") {
      ls >> crc_expect;
    } else {
      throw corrupt("unknown header key: " + key);
    }
    if (ls.fail()) throw corrupt("malformed header line: " + line);
  }
  if (!saw_end) throw corrupt("missing header terminator");
  if (arch.layer_dims.size() < 2) throw corrupt("missing arch");

  std::vector<std::uint8_t> payload(payload_count * 8);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw corrupt("payload truncated");
  }
  char extra;
  if (in.read(&extra, 1)) throw corrupt("trailing bytes after payload");

  const auto crc = crc32(0, payload.data(), static_cast<uInt>(payload.size()));
  if (crc != crc_expect) throw corrupt("payload checksum mismatch");

  c.params.arch = arch;
  const std::uint8_t* p = payload.data();
  std::size_t remaining = payload_count;
  auto take = [&](std::size_t count, std::vector<double>& dst) {
    if (remaining < count) throw corrupt("payload shorter than arch requires");
    dst.resize(count);
    for (std::size_t i = 0; i < count; ++i, p += 8) dst[i] = get_le_double(p);
    remaining -= count;
  };
  for (std::size_t l = 0; l + 1 < arch.layer_dims.size(); ++l) {
    Matrix w(arch.layer_dims[l + 1], arch.layer_dims[l]);
    take(w.rows * w.cols, w.data);
    c.params.weights.push_back(std::move(w));
    if (arch.with_bias) {
      Vector b(arch.layer_dims[l + 1]);
      take(b.dim(), b.data);
      c.params.biases.push_back(std::move(b));
    }
  }
  if (remaining != 0) throw corrupt("payload longer than arch requires");
  c.format_version = version;
  return c;
}

}  // namespace lmc
