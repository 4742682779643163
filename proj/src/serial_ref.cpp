#include "lmc/serial_ref.hpp"

#include <algorithm>

#include "lmc/ndcore.hpp"

namespace lmc {

ActivationTrace forward_trace_serial(const ParamSet& p, const Matrix& batch) {
  require(batch.cols == p.arch.input_dim(), "forward: input dim mismatch");
  const std::size_t L = p.arch.depth();
  const std::size_t n = batch.rows;

  ActivationTrace tr;
  for (std::size_t l = 0; l < L; ++l) {
    tr.pre.emplace_back(n, p.arch.layer_dims[l + 1]);
    tr.post.emplace_back(n, p.arch.layer_dims[l + 1]);
  }
  for (std::size_t s = 0; s < n; ++s) {
    std::span<const double> cur = batch.row(s);
    for (std::size_t l = 0; l < L; ++l) {
      auto pre = tr.pre[l].row(s);
      matvec_into(p.weights[l], cur, pre);
      if (p.arch.with_bias) {
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += p.biases[l][i];
      }
      auto post = tr.post[l].row(s);
      if (l + 1 < L) {
        relu_into(pre, post);
      } else {
        std::copy(pre.begin(), pre.end(), post.begin());
      }
      cur = post;
    }
  }
  return tr;
}

BackwardResult backward_serial(const ParamSet& p, const Matrix& batch,
                               std::span<const int> labels) {
  const std::size_t n = batch.rows;
  const std::size_t L = p.arch.depth();
  const ActivationTrace tr = forward_trace_serial(p, batch);
  const double inv_n = 1.0 / static_cast<double>(n);

  BackwardResult out;
  out.grad = zeros_like(p);

  std::vector<double> up, down;
  for (std::size_t s = 0; s < n; ++s) {
    out.mean_loss += softmax_xent(tr.logits().row(s),
                                  static_cast<std::size_t>(labels[s]));
    up.assign(p.arch.output_dim(), 0.0);
    softmax_into(tr.logits().row(s), up);
    up[static_cast<std::size_t>(labels[s])] -= 1.0;
    for (double& x : up) x *= inv_n;

    for (std::size_t l = L; l-- > 0;) {
      const Matrix& input_m = (l == 0) ? batch : tr.post[l - 1];
      auto in = input_m.row(s);
      Matrix& gw = out.grad.weights[l];
      for (std::size_t i = 0; i < gw.rows; ++i) {
        auto grow = gw.row(i);
        for (std::size_t j = 0; j < grow.size(); ++j) grow[j] += up[i] * in[j];
        if (p.arch.with_bias) out.grad.biases[l][i] += up[i];
      }
      if (l == 0) break;
      const Matrix& w = p.weights[l];
      auto pre = tr.pre[l - 1].row(s);
      down.assign(w.cols, 0.0);
      for (std::size_t j = 0; j < w.cols; ++j) {
        if (pre[j] <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t i = 0; i < w.rows; ++i) acc += w.at(i, j) * up[i];
        down[j] = acc;
      }
      up = down;
    }
  }
  out.mean_loss *= inv_n;
  return out;
}

}  // namespace lmc
