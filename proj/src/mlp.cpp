#include "lmc/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "lmc/ndcore.hpp"
#include "lmc/parallel.hpp"

namespace lmc {

void Arch::validate() const {
  require(layer_dims.size() >= 2, "arch: need at least input and output dims");
  for (std::size_t d : layer_dims) require(d >= 1, "arch: zero-width layer");
}

Arch Arch::scaled(double multiplier) const {
  require(multiplier > 0.0, "arch: multiplier must be positive");
  Arch out = *this;
  for (std::size_t i = 1; i + 1 < out.layer_dims.size(); ++i) {
    const double scaled = static_cast<double>(layer_dims[i]) * multiplier;
    out.layer_dims[i] =
        static_cast<std::size_t>(std::max(1.0, std::round(scaled)));
  }
  return out;
}

void require_same_arch(const ParamSet& a, const ParamSet& b) {
  require(a.arch == b.arch, "parameter sets have mismatched architectures");
}

Gradient zeros_like(const ParamSet& p) {
  Gradient g;
  for (const auto& w : p.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : p.biases) g.biases.emplace_back(b.dim());
  return g;
}

ParamSet init(const Arch& arch, Rng& rng) {
  arch.validate();
  ParamSet p;
  p.arch = arch;
  const std::size_t L = arch.depth();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t fan_in = arch.layer_dims[l];
    const std::size_t fan_out = arch.layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (auto& x : w.data) x = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    if (arch.with_bias) p.biases.emplace_back(fan_out);
  }
  return p;
}

namespace {

constexpr std::size_t kTile = 64;

/// out[s, i] = sum_k in[s, k] * w(i, k), tiled so a block of weight rows
/// stays cached across a block of samples. Each dot product accumulates
/// over k in ascending order, so the results match the per-sample matvec
/// bit for bit.
void batch_matmul_wt(const Matrix& in, const Matrix& w, Matrix& out) {
  const std::size_t n = in.rows;
  const std::size_t rows = w.rows;
  const std::size_t n_blocks = (n + kTile - 1) / kTile;
  parallel_for(n_blocks, [&](std::size_t blk) {
    const std::size_t s_lo = blk * kTile;
    const std::size_t s_hi = std::min(n, s_lo + kTile);
    for (std::size_t i_lo = 0; i_lo < rows; i_lo += kTile) {
      const std::size_t i_hi = std::min(rows, i_lo + kTile);
      for (std::size_t s = s_lo; s < s_hi; ++s) {
        const double* x = in.data.data() + s * in.cols;
        double* dst = out.data.data() + s * out.cols;
        for (std::size_t i = i_lo; i < i_hi; ++i) {
          const double* wr = w.data.data() + i * w.cols;
          double acc = 0.0;
          for (std::size_t k = 0; k < w.cols; ++k) acc += wr[k] * x[k];
          dst[i] = acc;
        }
      }
    }
  });
}

}  // namespace

ActivationTrace forward_trace(const ParamSet& p, const Matrix& batch) {
  require(batch.cols == p.arch.input_dim(), "forward: input dim mismatch");
  const std::size_t L = p.arch.depth();
  const std::size_t n = batch.rows;

  ActivationTrace tr;
  tr.pre.reserve(L);
  tr.post.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    tr.pre.emplace_back(n, p.arch.layer_dims[l + 1]);
    tr.post.emplace_back(n, p.arch.layer_dims[l + 1]);
  }

  const Matrix* cur = &batch;
  for (std::size_t l = 0; l < L; ++l) {
    batch_matmul_wt(*cur, p.weights[l], tr.pre[l]);
    const bool is_last = l + 1 == L;
    parallel_for(n, [&](std::size_t s) {
      auto pre = tr.pre[l].row(s);
      if (p.arch.with_bias) {
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += p.biases[l][i];
      }
      auto post = tr.post[l].row(s);
      if (is_last) {
        std::copy(pre.begin(), pre.end(), post.begin());
      } else {
        relu_into(pre, post);
      }
    });
    cur = &tr.post[l];
  }
  return tr;
}

BackwardResult backward(const ParamSet& p, const Matrix& batch,
                        std::span<const int> labels) {
  require(batch.rows == labels.size(), "backward: batch/label count mismatch");
  const std::size_t n = batch.rows;
  const std::size_t L = p.arch.depth();
  const std::size_t classes = p.arch.output_dim();
  for (int lab : labels) {
    require(lab >= 0 && static_cast<std::size_t>(lab) < classes,
            "backward: label out of range");
  }

  const ActivationTrace tr = forward_trace(p, batch);

  // Per-sample losses, folded in index order for a thread-count-independent
  // mean.
  std::vector<double> losses(n);
  parallel_for(n, [&](std::size_t s) {
    losses[s] = softmax_xent(tr.logits().row(s),
                             static_cast<std::size_t>(labels[s]));
  });
  double loss_sum = 0.0;
  for (double v : losses) loss_sum += v;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Backpropagated deltas, one matrix per layer, rows are samples.
  std::vector<Matrix> delta;
  delta.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    delta.emplace_back(n, p.arch.layer_dims[l + 1]);
  }
  parallel_for(n, [&](std::size_t s) {
    auto dl = delta[L - 1].row(s);
    softmax_into(tr.logits().row(s), dl);
    dl[static_cast<std::size_t>(labels[s])] -= 1.0;
    for (double& x : dl) x *= inv_n;
  });
  for (std::size_t l = L - 1; l > 0; --l) {
    // transposed weights make the downward product a row-contiguous dot
    const Matrix wt = p.weights[l].transposed();
    batch_matmul_wt(delta[l], wt, delta[l - 1]);
    parallel_for(n, [&](std::size_t s) {
      auto down = delta[l - 1].row(s);
      auto pre = tr.pre[l - 1].row(s);
      for (std::size_t j = 0; j < down.size(); ++j) {
        if (pre[j] <= 0.0) down[j] = 0.0;
      }
    });
  }

  // Gradient accumulation: parallel over row blocks so one input row is
  // reused across the block; samples are summed in ascending order inside
  // each entry, independent of the thread count.
  BackwardResult out;
  out.mean_loss = loss_sum * inv_n;
  out.grad = zeros_like(p);
  for (std::size_t l = 0; l < L; ++l) {
    const Matrix& input = (l == 0) ? batch : tr.post[l - 1];
    Matrix& gw = out.grad.weights[l];
    const std::size_t n_blocks = (gw.rows + kTile - 1) / kTile;
    parallel_for(n_blocks, [&](std::size_t blk) {
      const std::size_t i_lo = blk * kTile;
      const std::size_t i_hi = std::min(gw.rows, i_lo + kTile);
      for (std::size_t s = 0; s < n; ++s) {
        const double* in = input.data.data() + s * input.cols;
        for (std::size_t i = i_lo; i < i_hi; ++i) {
          const double d = delta[l].at(s, i);
          if (d == 0.0) continue;
          double* grow = gw.data.data() + i * gw.cols;
          for (std::size_t j = 0; j < gw.cols; ++j) grow[j] += d * in[j];
        }
      }
      if (p.arch.with_bias) {
        for (std::size_t i = i_lo; i < i_hi; ++i) {
          double acc = 0.0;
          for (std::size_t s = 0; s < n; ++s) acc += delta[l].at(s, i);
          out.grad.biases[l][i] = acc;
        }
      }
    });
  }
  return out;
}

ParamSet interpolate(const ParamSet& a, const ParamSet& b, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "interpolate: lambda outside [0,1]");
  return interpolate_weighted(a, b, lambda, 1.0 - lambda);
}

ParamSet interpolate_weighted(const ParamSet& a, const ParamSet& b, double wa,
                              double wb) {
  require_same_arch(a, b);
  if (wa == 1.0 && wb == 0.0) return a;
  if (wa == 0.0 && wb == 1.0) return b;

  ParamSet out;
  out.arch = a.arch;
  auto mix = [&](const double* xa, const double* xb, double* dst,
                 std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      // Equal entries pass through untouched so a segment with b == a is
      // constant to the bit.
      dst[i] = (xa[i] == xb[i]) ? xa[i] : wa * xa[i] + wb * xb[i];
    }
  };
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    Matrix w(a.weights[l].rows, a.weights[l].cols);
    mix(a.weights[l].data.data(), b.weights[l].data.data(), w.data.data(),
        w.data.size());
    out.weights.push_back(std::move(w));
  }
  for (std::size_t l = 0; l < a.biases.size(); ++l) {
    Vector v(a.biases[l].dim());
    mix(a.biases[l].data.data(), b.biases[l].data.data(), v.data.data(),
        v.data.size());
    out.biases.push_back(std::move(v));
  }
  return out;
}

double param_distance(const ParamSet& a, const ParamSet& b) {
  require_same_arch(a, b);
  double acc = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    const auto& wa = a.weights[l].data;
    const auto& wb = b.weights[l].data;
    for (std::size_t i = 0; i < wa.size(); ++i) {
      const double d = wa[i] - wb[i];
      acc += d * d;
    }
  }
  for (std::size_t l = 0; l < a.biases.size(); ++l) {
    const auto& ba = a.biases[l].data;
    const auto& bb = b.biases[l].data;
    for (std::size_t i = 0; i < ba.size(); ++i) {
      const double d = ba[i] - bb[i];
      acc += d * d;
    }
  }
  return std::sqrt(acc);
}

}  // namespace lmc
