#include "lmc/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lmc/ndcore.hpp"
#include "lmc/parallel.hpp"

namespace lmc {

namespace {

constexpr std::size_t kEvalBatch = 512;

/// Streams d in batches; f(batch_matrix, first_row_index).
template <class F>
void for_batches(const Dataset& d, F&& f) {
  const std::size_t n = d.size();
  for (std::size_t lo = 0; lo < n; lo += kEvalBatch) {
    const std::size_t hi = std::min(n, lo + kEvalBatch);
    Matrix batch(hi - lo, d.input_dim());
    for (std::size_t s = lo; s < hi; ++s) {
      auto src = d.images.row(s);
      std::copy(src.begin(), src.end(), batch.row(s - lo).begin());
    }
    f(batch, lo);
  }
}

/// Folds per-sample cosine-like observations deterministically. Values are
/// produced in parallel into slots, then accumulated in index order.
struct StatAccum {
  CosineAggregation agg = CosineAggregation::per_sample_mean;
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t degenerate = 0;
  // concatenated mode
  double dot_acc = 0.0;
  double nu2 = 0.0;
  double nv2 = 0.0;

  void add_sample(const CosineResult& r) {
    if (r.degenerate) {
      ++degenerate;
    } else {
      sum += r.value;
      ++count;
    }
  }

  void add_concat(double d, double u2, double v2) {
    dot_acc += d;
    nu2 += u2;
    nv2 += v2;
    ++count;
  }

  MeanCosine finish() const {
    MeanCosine out;
    out.degenerate = degenerate;
    if (agg == CosineAggregation::per_sample_mean) {
      out.count = count;
      out.mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
    } else {
      out.count = count;
      const double nu = std::sqrt(nu2);
      const double nv = std::sqrt(nv2);
      if (nu < 1e-12 || nv < 1e-12) {
        out.degenerate = count;
        out.count = 0;
      } else {
        out.mean = std::clamp(dot_acc / (nu * nv), -1.0, 1.0);
      }
    }
    return out;
  }
};

double ulp_guarded_line(double value_a, double value_b, double wa, double wb) {
  // Equal endpoints return the shared value so degenerate segments are
  // exactly flat.
  return value_a == value_b ? value_a : wa * value_a + wb * value_b;
}

std::vector<double> make_grid(std::size_t g) {
  require(g >= 2, "barrier: grid must have at least 2 points");
  if (g == 2) return {0.0, 1.0};
  std::vector<double> grid(g);
  for (std::size_t i = 0; i < g; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(g - 1);
  }
  if (std::find(grid.begin(), grid.end(), 0.5) == grid.end()) {
    grid.push_back(0.5);
    std::sort(grid.begin(), grid.end());
  }
  return grid;
}

}  // namespace

Matrix logits_of(const ParamSet& p, const Dataset& d) {
  require(d.input_dim() == p.arch.input_dim(), "logits: input dim mismatch");
  Matrix out(d.size(), p.arch.output_dim());
  for_batches(d, [&](const Matrix& batch, std::size_t lo) {
    const ActivationTrace tr = forward_trace(p, batch);
    parallel_for(batch.rows, [&](std::size_t i) {
      auto src = tr.logits().row(i);
      std::copy(src.begin(), src.end(), out.row(lo + i).begin());
    });
  });
  return out;
}

double mean_nll(const Matrix& logits, std::span<const int> labels,
                std::span<const std::size_t> rows, double beta) {
  require(!rows.empty(), "mean_nll: empty row set");
  double acc = 0.0;
  for (std::size_t r : rows) {
    acc += softmax_xent(logits.row(r), static_cast<std::size_t>(labels[r]),
                        beta);
  }
  return acc / static_cast<double>(rows.size());
}

TemperatureFit fit_temperature(const Matrix& logits,
                               std::span<const int> labels,
                               double calibration_fraction, Rng& rng) {
  require(logits.rows == labels.size(), "fit_temperature: label count");
  require(calibration_fraction > 0.0 && calibration_fraction < 1.0,
          "fit_temperature: calibration fraction must lie in (0,1)");
  const std::size_t n = logits.rows;
  require(n >= 2, "fit_temperature: need at least two samples");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  const auto want = static_cast<std::size_t>(
      std::llround(calibration_fraction * static_cast<double>(n)));
  const std::size_t n_cal = std::clamp<std::size_t>(want, 1, n - 1);
  const std::span<const std::size_t> cal(idx.data(), n_cal);
  const std::span<const std::size_t> hold(idx.data() + n_cal, n - n_cal);

  auto nll_cal = [&](double beta) { return mean_nll(logits, labels, cal, beta); };

  double lo = std::log(1e-2);
  double hi = std::log(1e2);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double t1 = hi - invphi * (hi - lo);
  double t2 = lo + invphi * (hi - lo);
  double f1 = nll_cal(std::exp(t1));
  double f2 = nll_cal(std::exp(t2));
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = t2;
      t2 = t1;
      f2 = f1;
      t1 = hi - invphi * (hi - lo);
      f1 = nll_cal(std::exp(t1));
    } else {
      lo = t1;
      t1 = t2;
      f1 = f2;
      t2 = lo + invphi * (hi - lo);
      f2 = nll_cal(std::exp(t2));
    }
  }

  TemperatureFit fit;
  double beta = std::exp(0.5 * (lo + hi));
  double nll_beta = nll_cal(beta);
  const double nll_one = nll_cal(1.0);
  if (nll_one <= nll_beta) {
    beta = 1.0;
    nll_beta = nll_one;
  }
  fit.beta = beta;
  fit.nll_before_cal = nll_one;
  fit.nll_after_cal = nll_beta;
  fit.nll_before = mean_nll(logits, labels, hold, 1.0);
  fit.nll_after = beta == 1.0 ? fit.nll_before
                              : mean_nll(logits, labels, hold, beta);
  return fit;
}

BarrierCurve barrier_curve(const ParamSet& a, const ParamSet& b,
                           const Dataset& train, const Dataset& test,
                           const BarrierConfig& cfg) {
  require_same_arch(a, b);
  const std::vector<double> grid = make_grid(cfg.grid);

  BarrierCurve curve;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lambda = grid[i];
    // mirror grid value as the b-weight keeps swapped runs bit-symmetric
    const ParamSet c =
        interpolate_weighted(a, b, lambda, grid[grid.size() - 1 - i]);
    BarrierPoint pt;
    pt.lambda = lambda;
    pt.train_loss = evaluate(c, train).loss;

    const Matrix logits = logits_of(c, test);
    std::vector<std::size_t> all(test.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    pt.test_loss = mean_nll(logits, test.labels, all, 1.0);
    std::size_t n_correct = 0;
    for (std::size_t s = 0; s < test.size(); ++s) {
      if (argmax_lowest(logits.row(s)) ==
          static_cast<std::size_t>(test.labels[s])) {
        ++n_correct;
      }
    }
    pt.test_acc = static_cast<double>(n_correct) /
                  static_cast<double>(test.size());

    Rng cal_rng(cfg.calibration_seed);
    const TemperatureFit fit = fit_temperature(
        logits, test.labels, cfg.calibration_fraction, cal_rng);
    pt.calibrated_test_loss = fit.nll_after;
    pt.inverse_temperature = fit.beta;

    curve.points.push_back(pt);
    curve.fits.push_back(fit);
  }

  auto barrier_of = [&](auto getter) {
    const double at_b = getter(curve.points.front());  // lambda = 0
    const double at_a = getter(curve.points.back());   // lambda = 1
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t m = curve.points.size();
    for (std::size_t i = 0; i < m; ++i) {
      const double wa = curve.points[i].lambda;
      const double wb = curve.points[m - 1 - i].lambda;  // mirror grid value
      const double base = ulp_guarded_line(at_a, at_b, wa, wb);
      best = std::max(best, getter(curve.points[i]) - base);
    }
    return best;
  };
  curve.barrier_raw_train =
      barrier_of([](const BarrierPoint& p) { return p.train_loss; });
  curve.barrier_raw_test =
      barrier_of([](const BarrierPoint& p) { return p.test_loss; });
  curve.barrier_calibrated =
      barrier_of([](const BarrierPoint& p) { return p.calibrated_test_loss; });
  return curve;
}

EvalResult ensemble_eval(const ParamSet& a, const ParamSet& b, double lambda,
                         std::size_t depth_L, const Dataset& d) {
  require_same_arch(a, b);
  require(lambda >= 0.0 && lambda <= 1.0, "ensemble: lambda outside [0,1]");
  require(depth_L >= 1, "ensemble: depth must be >= 1");

  const double pa = ipow(lambda, depth_L);
  const double pb = ipow(1.0 - lambda, depth_L);
  const double wa = pa / (pa + pb);
  const double wb = pb / (pa + pb);

  const std::size_t n = d.size();
  std::vector<double> losses(n);
  std::vector<std::uint8_t> correct(n);
  for_batches(d, [&](const Matrix& batch, std::size_t lo) {
    const ActivationTrace tra = forward_trace(a, batch);
    const ActivationTrace trb = forward_trace(b, batch);
    parallel_for(batch.rows, [&](std::size_t i) {
      auto za = tra.logits().row(i);
      auto zb = trb.logits().row(i);
      std::vector<double> mix(za.size());
      if (lambda == 1.0) {
        std::copy(za.begin(), za.end(), mix.begin());
      } else if (lambda == 0.0) {
        std::copy(zb.begin(), zb.end(), mix.begin());
      } else {
        for (std::size_t k = 0; k < mix.size(); ++k) {
          mix[k] = wa * za[k] + wb * zb[k];
        }
      }
      const auto label = static_cast<std::size_t>(d.labels[lo + i]);
      losses[lo + i] = softmax_xent(mix, label);
      correct[lo + i] = argmax_lowest(mix) == label ? 1 : 0;
    });
  });
  double loss_sum = 0.0;
  std::size_t n_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    loss_sum += losses[i];
    n_correct += correct[i];
  }
  return {loss_sum / static_cast<double>(n),
          static_cast<double>(n_correct) / static_cast<double>(n)};
}

// ---------------------------------------------------------------------------
// Layer diagnostics
// ---------------------------------------------------------------------------

std::vector<MeanCosine> lewc_diagnostic(const ParamSet& a, const ParamSet& b,
                                        double lambda, const Dataset& d,
                                        CosineAggregation agg) {
  require_same_arch(a, b);
  require(lambda >= 0.0 && lambda <= 1.0, "lewc: lambda outside [0,1]");
  const ParamSet c = interpolate(a, b, lambda);
  const std::size_t L = a.arch.depth();

  std::vector<StatAccum> acc(L);
  for (auto& s : acc) s.agg = agg;

  for_batches(d, [&](const Matrix& batch, std::size_t) {
    const ActivationTrace tra = forward_trace(a, batch);
    const ActivationTrace trb = forward_trace(b, batch);
    const ActivationTrace trc = forward_trace(c, batch);
    for (std::size_t l = 0; l < L; ++l) {
      const double wl_a = ipow(lambda, l + 1);
      const double wl_b = ipow(1.0 - lambda, l + 1);
      const std::size_t dim = a.arch.layer_dims[l + 1];
      std::vector<CosineResult> slots(batch.rows);
      std::vector<double> concat(batch.rows * 3);
      parallel_for(batch.rows, [&](std::size_t s) {
        auto fa = tra.post[l].row(s);
        auto fb = trb.post[l].row(s);
        auto fc = trc.post[l].row(s);
        std::vector<double> target(dim);
        for (std::size_t k = 0; k < dim; ++k) {
          target[k] = wl_a * fa[k] + wl_b * fb[k];
        }
        if (agg == CosineAggregation::per_sample_mean) {
          slots[s] = cosine_similarity_checked(fc, target);
        } else {
          concat[3 * s] = dot(fc, target);
          concat[3 * s + 1] = dot(fc, fc);
          concat[3 * s + 2] = dot(target, target);
        }
      });
      for (std::size_t s = 0; s < batch.rows; ++s) {
        if (agg == CosineAggregation::per_sample_mean) {
          acc[l].add_sample(slots[s]);
        } else {
          acc[l].add_concat(concat[3 * s], concat[3 * s + 1], concat[3 * s + 2]);
        }
      }
    }
  });

  std::vector<MeanCosine> out;
  out.reserve(L);
  for (const auto& s : acc) out.push_back(s.finish());
  return out;
}

std::vector<MeanCosine> relu_additivity_diagnostic(const ParamSet& a,
                                                   const ParamSet& b,
                                                   const Dataset& d,
                                                   CosineAggregation agg) {
  require_same_arch(a, b);
  const std::size_t L = a.arch.depth();
  require(L >= 2, "relu additivity: need at least one hidden layer");
  const std::size_t n_relu = L - 1;

  std::vector<StatAccum> acc(n_relu);
  for (auto& s : acc) s.agg = agg;

  for_batches(d, [&](const Matrix& batch, std::size_t) {
    const ActivationTrace tra = forward_trace(a, batch);
    const ActivationTrace trb = forward_trace(b, batch);
    for (std::size_t l = 0; l < n_relu; ++l) {
      const std::size_t dim = a.arch.layer_dims[l + 1];
      std::vector<CosineResult> slots(batch.rows);
      std::vector<double> concat(batch.rows * 3);
      parallel_for(batch.rows, [&](std::size_t s) {
        auto za = tra.pre[l].row(s);
        auto zb = trb.pre[l].row(s);
        std::vector<double> mixed(dim), summed(dim);
        for (std::size_t k = 0; k < dim; ++k) {
          const double mid = 0.5 * (za[k] + zb[k]);
          mixed[k] = mid > 0.0 ? mid : 0.0;
          const double ra = za[k] > 0.0 ? za[k] : 0.0;
          const double rb = zb[k] > 0.0 ? zb[k] : 0.0;
          summed[k] = 0.5 * (ra + rb);
        }
        if (agg == CosineAggregation::per_sample_mean) {
          slots[s] = cosine_similarity_checked(mixed, summed);
        } else {
          concat[3 * s] = dot(mixed, summed);
          concat[3 * s + 1] = dot(mixed, mixed);
          concat[3 * s + 2] = dot(summed, summed);
        }
      });
      for (std::size_t s = 0; s < batch.rows; ++s) {
        if (agg == CosineAggregation::per_sample_mean) {
          acc[l].add_sample(slots[s]);
        } else {
          acc[l].add_concat(concat[3 * s], concat[3 * s + 1], concat[3 * s + 2]);
        }
      }
    }
  });

  std::vector<MeanCosine> out;
  out.reserve(n_relu);
  for (const auto& s : acc) out.push_back(s.finish());
  return out;
}

namespace {

/// W z without the bias: recovered from the trace as pre - b.
void own_product_into(const ParamSet& p, const ActivationTrace& tr,
                      std::size_t l, std::size_t s, std::span<double> out) {
  auto pre = tr.pre[l].row(s);
  if (p.biases.empty()) {
    std::copy(pre.begin(), pre.end(), out.begin());
  } else {
    const auto& bias = p.biases[l];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pre[i] - bias[i];
  }
}

}  // namespace

std::vector<RoLayerStat> reciprocal_orthogonality_diagnostic(
    const ParamSet& a, const ParamSet& b, double lambda, const Dataset& d) {
  require_same_arch(a, b);
  require(lambda >= 0.0 && lambda <= 1.0, "ro: lambda outside [0,1]");
  const std::size_t L = a.arch.depth();
  require(L >= 2, "ro: need at least one hidden layer");
  const ParamSet c = interpolate(a, b, lambda);

  struct Sums {
    double own_a = 0.0, own_b = 0.0, cross_ab = 0.0, cross_ba = 0.0;
    StatAccum cos_a, cos_b;
  };
  std::vector<Sums> sums(L - 1);

  for_batches(d, [&](const Matrix& batch, std::size_t) {
    const ActivationTrace tra = forward_trace(a, batch);
    const ActivationTrace trb = forward_trace(b, batch);
    const ActivationTrace trc = forward_trace(c, batch);
    for (std::size_t l = 1; l < L; ++l) {
      const std::size_t rows = a.arch.layer_dims[l + 1];
      const std::size_t nb = batch.rows;
      // slots: own_a, own_b, cross_ab, cross_ba norms + two cosine results
      std::vector<double> norms(nb * 4);
      std::vector<CosineResult> cos_a(nb), cos_b(nb);
      parallel_for(nb, [&](std::size_t s) {
        std::vector<double> wa_za(rows), wb_zb(rows), wa_zb(rows), wb_za(rows),
            wa_zc(rows), wb_zc(rows);
        own_product_into(a, tra, l, s, wa_za);
        own_product_into(b, trb, l, s, wb_zb);
        matvec_into(a.weights[l], trb.post[l - 1].row(s), wa_zb);
        matvec_into(b.weights[l], tra.post[l - 1].row(s), wb_za);
        matvec_into(a.weights[l], trc.post[l - 1].row(s), wa_zc);
        matvec_into(b.weights[l], trc.post[l - 1].row(s), wb_zc);
        norms[4 * s] = norm2(wa_za);
        norms[4 * s + 1] = norm2(wb_zb);
        norms[4 * s + 2] = norm2(wa_zb);
        norms[4 * s + 3] = norm2(wb_za);
        cos_a[s] = cosine_similarity_checked(wa_zc, wa_za);
        cos_b[s] = cosine_similarity_checked(wb_zc, wb_zb);
      });
      auto& dst = sums[l - 1];
      for (std::size_t s = 0; s < nb; ++s) {
        dst.own_a += norms[4 * s];
        dst.own_b += norms[4 * s + 1];
        dst.cross_ab += norms[4 * s + 2];
        dst.cross_ba += norms[4 * s + 3];
        dst.cos_a.add_sample(cos_a[s]);
        dst.cos_b.add_sample(cos_b[s]);
      }
    }
  });

  std::vector<RoLayerStat> out(L - 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].norm_ratio_ab =
        sums[i].own_a > 0.0 ? sums[i].cross_ab / sums[i].own_a
                            : std::numeric_limits<double>::quiet_NaN();
    out[i].norm_ratio_ba =
        sums[i].own_b > 0.0 ? sums[i].cross_ba / sums[i].own_b
                            : std::numeric_limits<double>::quiet_NaN();
    out[i].merged_input_cos_a = sums[i].cos_a.finish();
    out[i].merged_input_cos_b = sums[i].cos_b.finish();
  }
  return out;
}

std::vector<MeanCosine> commutativity_diagnostic(const ParamSet& a,
                                                 const ParamSet& b,
                                                 const Dataset& d) {
  require_same_arch(a, b);
  const std::size_t L = a.arch.depth();
  std::vector<StatAccum> acc(L);

  for_batches(d, [&](const Matrix& batch, std::size_t) {
    const ActivationTrace tra = forward_trace(a, batch);
    const ActivationTrace trb = forward_trace(b, batch);
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t rows = a.arch.layer_dims[l + 1];
      const std::size_t nb = batch.rows;
      std::vector<CosineResult> slots(nb);
      parallel_for(nb, [&](std::size_t s) {
        std::vector<double> lhs(rows), rhs(rows), wa_zb(rows), wb_za(rows);
        own_product_into(a, tra, l, s, lhs);   // Wa za
        own_product_into(b, trb, l, s, rhs);   // Wb zb
        const auto in_a = l == 0 ? batch.row(s) : tra.post[l - 1].row(s);
        const auto in_b = l == 0 ? batch.row(s) : trb.post[l - 1].row(s);
        matvec_into(a.weights[l], in_b, wa_zb);
        matvec_into(b.weights[l], in_a, wb_za);
        double d2 = 0.0, n_lhs = 0.0, n_rhs = 0.0;
        for (std::size_t k = 0; k < rows; ++k) {
          const double x = lhs[k] + rhs[k];
          const double y = wa_zb[k] + wb_za[k];
          d2 += (x - y) * (x - y);
          n_lhs += x * x;
          n_rhs += y * y;
        }
        const double nx = std::sqrt(n_lhs);
        const double ny = std::sqrt(n_rhs);
        if (nx < 1e-12 || ny < 1e-12) {
          slots[s] = {0.0, true};
        } else {
          slots[s] = {d2 / (nx * ny), false};
        }
      });
      for (std::size_t s = 0; s < nb; ++s) acc[l].add_sample(slots[s]);
    }
  });

  std::vector<MeanCosine> out;
  out.reserve(L);
  for (const auto& s : acc) out.push_back(s.finish());
  return out;
}

std::vector<PreactLayerStats> preactivation_stats(const ParamSet& p,
                                                  const Dataset& d) {
  const std::size_t L = p.arch.depth();
  require(L >= 2, "preactivation stats: need at least one hidden layer");
  const std::size_t n_relu = L - 1;

  std::vector<std::vector<double>> sq_sums(n_relu);
  for (std::size_t l = 0; l < n_relu; ++l) {
    sq_sums[l].assign(p.arch.layer_dims[l + 1], 0.0);
  }

  for_batches(d, [&](const Matrix& batch, std::size_t) {
    const ActivationTrace tr = forward_trace(p, batch);
    for (std::size_t l = 0; l < n_relu; ++l) {
      auto& sums = sq_sums[l];
      parallel_for(sums.size(), [&](std::size_t j) {
        double acc = 0.0;
        for (std::size_t s = 0; s < batch.rows; ++s) {
          const double z = tr.pre[l].at(s, j);
          acc += z * z;
        }
        sums[j] += acc;
      });
    }
  });

  const double inv_n = 1.0 / static_cast<double>(d.size());
  std::vector<PreactLayerStats> out(n_relu);
  for (std::size_t l = 0; l < n_relu; ++l) {
    auto& st = out[l];
    st.std_about_zero.resize(sq_sums[l].size());
    double max_std = 0.0;
    for (std::size_t j = 0; j < sq_sums[l].size(); ++j) {
      st.std_about_zero[j] = std::sqrt(sq_sums[l][j] * inv_n);
      max_std = std::max(max_std, st.std_about_zero[j]);
    }
    if (max_std < 1e-12) {
      st.degenerate = true;
      st.small_std_fraction = 1.0;
      continue;
    }
    const double thr = max_std / 100.0;
    std::size_t small = 0;
    for (double sd : st.std_about_zero) {
      if (sd < thr) ++small;
    }
    st.small_std_fraction =
        static_cast<double>(small) / static_cast<double>(st.std_about_zero.size());
  }
  return out;
}

std::vector<OverlapStat> overlap_stats(const ParamSet& a, const ParamSet& b,
                                       const Dataset& d, OverlapMode mode) {
  require_same_arch(a, b);
  const auto stats_a = preactivation_stats(a, d);
  const auto stats_b = preactivation_stats(b, d);

  std::vector<OverlapStat> out(stats_a.size());
  for (std::size_t l = 0; l < stats_a.size(); ++l) {
    auto high_set = [](const PreactLayerStats& st) {
      std::vector<char> high(st.std_about_zero.size(), 0);
      if (st.degenerate) return high;
      double max_std = 0.0;
      for (double sd : st.std_about_zero) max_std = std::max(max_std, sd);
      const double thr = max_std / 100.0;
      for (std::size_t j = 0; j < high.size(); ++j) {
        high[j] = st.std_about_zero[j] >= thr ? 1 : 0;
      }
      return high;
    };
    const auto ha = high_set(stats_a[l]);
    const auto hb = high_set(stats_b[l]);
    std::size_t na = 0, nb = 0, inter = 0, uni = 0;
    for (std::size_t j = 0; j < ha.size(); ++j) {
      na += ha[j];
      nb += hb[j];
      inter += (ha[j] && hb[j]) ? 1 : 0;
      uni += (ha[j] || hb[j]) ? 1 : 0;
    }
    if (mode == OverlapMode::min_normalized) {
      const std::size_t denom = std::min(na, nb);
      if (denom == 0) continue;  // left undefined
      out[l].nonoverlap_fraction =
          1.0 - static_cast<double>(inter) / static_cast<double>(denom);
    } else {
      if (uni == 0) continue;
      out[l].nonoverlap_fraction =
          1.0 - static_cast<double>(inter) / static_cast<double>(uni);
    }
    out[l].defined = true;
  }
  return out;
}

std::vector<RankLayerStat> rank_profile(const ParamSet& p) {
  std::vector<RankLayerStat> out(p.weights.size());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Matrix& w = p.weights[l];
    const auto sv = singular_values(w);
    double fro2 = 0.0;
    for (double x : w.data) fro2 += x * x;
    const double smax = sv.empty() ? 0.0 : sv.front();
    auto& st = out[l];
    st.width = std::min(w.rows, w.cols);
    if (smax <= 0.0) continue;  // zero matrix: ranks stay 0
    st.stable_rank = fro2 / (smax * smax);
    for (double s : sv) {
      if (s > 0.01 * smax) ++st.eps_rank;
    }
  }
  return out;
}

std::pair<ParamSet, ParamSet> build_lewc_pair(const Arch& arch, Rng& rng) {
  arch.validate();
  require(!arch.with_bias, "lewc pair: arch must be bias-free");
  require(arch.depth() >= 2, "lewc pair: need at least one hidden layer");
  for (std::size_t i = 1; i + 1 < arch.layer_dims.size(); ++i) {
    require(arch.layer_dims[i] % 2 == 0, "lewc pair: hidden dims must be even");
  }

  ParamSet a = init(arch, rng);
  ParamSet b = init(arch, rng);
  const std::size_t L = arch.depth();

  // `half` selects the living block: 0 keeps the first half of each hidden
  // layer, 1 the second.
  auto mask = [&](ParamSet& p, std::size_t half) {
    for (std::size_t l = 0; l < L; ++l) {
      Matrix& w = p.weights[l];
      const bool rows_split = l + 1 < arch.layer_dims.size() - 1;
      const bool cols_split = l > 0;
      const std::size_t row_half = w.rows / 2;
      const std::size_t col_half = w.cols / 2;
      for (std::size_t i = 0; i < w.rows; ++i) {
        const bool row_dead = rows_split && (i / row_half) != half;
        for (std::size_t j = 0; j < w.cols; ++j) {
          const bool col_dead = cols_split && (j / col_half) != half;
          if (row_dead || col_dead) w.at(i, j) = 0.0;
        }
      }
    }
  };
  mask(a, 0);
  mask(b, 1);
  return {std::move(a), std::move(b)};
}

DiagnosticsReport diagnostics_report(const ParamSet& a, const ParamSet& b,
                                     double lambda, const Dataset& d,
                                     CosineAggregation agg,
                                     OverlapMode overlap_mode) {
  DiagnosticsReport r;
  r.lambda = lambda;
  r.arch = a.arch;
  r.lewc_cos = lewc_diagnostic(a, b, lambda, d, agg);
  if (a.arch.depth() >= 2) {
    r.relu_add_cos = relu_additivity_diagnostic(a, b, d, agg);
    r.ro = reciprocal_orthogonality_diagnostic(a, b, lambda, d);
    r.preact_a = preactivation_stats(a, d);
    r.preact_b = preactivation_stats(b, d);
    r.overlap = overlap_stats(a, b, d, overlap_mode);
  }
  r.commutativity_dist = commutativity_diagnostic(a, b, d);
  r.rank_a = rank_profile(a);
  r.rank_b = rank_profile(b);
  return r;
}

}  // namespace lmc
