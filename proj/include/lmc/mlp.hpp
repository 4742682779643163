#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmc/dense.hpp"
#include "lmc/rng.hpp"

namespace lmc {

/// ReLU MLP architecture: layer_dims = {input, hidden..., output}.
struct Arch {
  std::vector<std::size_t> layer_dims;
  bool with_bias = true;

  /// Number of weight layers L.
  std::size_t depth() const { return layer_dims.size() - 1; }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }

  void validate() const;
  bool operator==(const Arch&) const = default;

  /// Every hidden dim scaled by `multiplier`, rounded to nearest, floor 1.
  Arch scaled(double multiplier) const;
};

/// Full parameter set: weights[l] is dims[l+1] x dims[l]; biases match rows.
struct ParamSet {
  Arch arch;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;  // empty when !arch.with_bias
};

/// Mirror of ParamSet shapes, used for gradients and optimizer moments.
struct Gradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

Gradient zeros_like(const ParamSet& p);

/// Per-layer pre- and post-activations for every sample in a batch.
/// post[l] = relu(pre[l]) for hidden layers; at the last layer post == pre
/// (the logits; the output layer has no activation).
struct ActivationTrace {
  std::vector<Matrix> pre;   // pre[l]: batch x dims[l+1]
  std::vector<Matrix> post;  // same shapes

  const Matrix& logits() const { return pre.back(); }
};

/// Kaiming-uniform weights (entries in +-sqrt(6/fan_in)), zero biases.
ParamSet init(const Arch& arch, Rng& rng);

/// Forward pass over a batch (rows are samples), parallel across samples.
ActivationTrace forward_trace(const ParamSet& p, const Matrix& batch);

struct BackwardResult {
  double mean_loss = 0.0;
  Gradient grad;
};

/// Mean softmax cross-entropy and its gradient over the batch.
BackwardResult backward(const ParamSet& p, const Matrix& batch,
                        std::span<const int> labels);

/// lambda * a + (1 - lambda) * b. lambda must lie in [0, 1]; endpoints and
/// equal entries reproduce the inputs bit-for-bit.
ParamSet interpolate(const ParamSet& a, const ParamSet& b, double lambda);

/// wa * a + wb * b with both weights given explicitly. Barrier grids pass
/// the mirrored grid value as wb so swapping (a, b) mirrors the curve to
/// the bit (1 - lambda recomputed from the mirror point can differ by an
/// ulp from the grid value).
ParamSet interpolate_weighted(const ParamSet& a, const ParamSet& b, double wa,
                              double wb);

/// Frobenius norm of the concatenated parameter difference.
double param_distance(const ParamSet& a, const ParamSet& b);

void require_same_arch(const ParamSet& a, const ParamSet& b);

}  // namespace lmc
