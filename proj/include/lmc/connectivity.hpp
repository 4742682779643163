#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lmc/dataio.hpp"
#include "lmc/mlp.hpp"
#include "lmc/trainer.hpp"

namespace lmc {

// ---------------------------------------------------------------------------
// Interpolation barrier and temperature calibration
// ---------------------------------------------------------------------------

/// Inverse temperature fitted on a calibration slice of the data. beta
/// multiplies the logits before the softmax; it changes the NLL but never
/// the predicted labels. The "cal" pair is measured on the calibration
/// slice (where beta=1 is always a candidate, so nll_after_cal <=
/// nll_before_cal); nll_before/nll_after are measured on the held-out
/// remainder and are what calibrated loss curves report.
struct TemperatureFit {
  double beta = 1.0;
  double nll_before_cal = 0.0;
  double nll_after_cal = 0.0;
  double nll_before = 0.0;
  double nll_after = 0.0;
};

struct BarrierPoint {
  double lambda = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  double calibrated_test_loss = 0.0;
  double inverse_temperature = 1.0;
};

/// Losses along the straight parameter segment between two models, with the
/// barrier = max over the grid of loss minus the endpoint-weighted line.
/// Point lambda evaluates lambda * a + (1 - lambda) * b.
struct BarrierCurve {
  std::vector<BarrierPoint> points;  // sorted by lambda; 0, 0.5, 1 present
  std::vector<TemperatureFit> fits;  // parallel to points
  double barrier_raw_train = 0.0;
  double barrier_raw_test = 0.0;
  double barrier_calibrated = 0.0;

  const BarrierPoint& endpoint_b() const { return points.front(); }
  const BarrierPoint& endpoint_a() const { return points.back(); }
};

struct BarrierConfig {
  std::size_t grid = 25;
  double calibration_fraction = 0.2;
  std::uint64_t calibration_seed = 9001;
};

BarrierCurve barrier_curve(const ParamSet& a, const ParamSet& b,
                           const Dataset& train, const Dataset& test,
                           const BarrierConfig& cfg = {});

/// Fits one scalar inverse temperature by golden-section search on log(beta)
/// over [1e-2, 1e2] (refined to 1e-4 relative, beta=1 always a candidate)
/// against the calibration slice, then reports held-out NLLs.
TemperatureFit fit_temperature(const Matrix& logits, std::span<const int> labels,
                               double calibration_fraction, Rng& rng);

/// Logit ensemble with weights lambda^L and (1-lambda)^L normalized to sum
/// to one; reduces exactly to an endpoint at lambda 0 or 1.
EvalResult ensemble_eval(const ParamSet& a, const ParamSet& b, double lambda,
                         std::size_t depth_L, const Dataset& d);

// ---------------------------------------------------------------------------
// Per-layer diagnostics. Cosines are averaged per sample over the dataset;
// samples with a degenerate (near-zero) vector are excluded from the mean
// and counted. Layer indices are 1-based as reported.
// ---------------------------------------------------------------------------

struct MeanCosine {
  double mean = 0.0;
  std::size_t degenerate = 0;  // samples excluded
  std::size_t count = 0;       // samples included

  bool defined() const { return count > 0; }
};

/// How per-sample cosines are aggregated. PerSampleMean matches figure
/// captions ("average cosine similarity"); Concatenated treats the whole
/// dataset as one long vector and is kept one flag away for comparison.
enum class CosineAggregation { per_sample_mean, concatenated };

/// Cosine between the merged model's layer-l output and
/// lambda^l f_l(a) + (1-lambda)^l f_l(b), for every layer (logits at the
/// last layer).
std::vector<MeanCosine> lewc_diagnostic(
    const ParamSet& a, const ParamSet& b, double lambda, const Dataset& d,
    CosineAggregation agg = CosineAggregation::per_sample_mean);

/// Cosine between relu((za + zb) / 2) and (relu(za) + relu(zb)) / 2 on each
/// model's own pre-activations; ReLU layers only (1..L-1).
std::vector<MeanCosine> relu_additivity_diagnostic(
    const ParamSet& a, const ParamSet& b, const Dataset& d,
    CosineAggregation agg = CosineAggregation::per_sample_mean);

/// Cross-application statistics for layers 2..L, both directions.
struct RoLayerStat {
  // mean ||W_l^x z_{l-1}^y|| / mean ||W_l^x z_{l-1}^x||
  double norm_ratio_ab = 0.0;  // x = a, y = b
  double norm_ratio_ba = 0.0;
  // mean cosine(W_l^x z_{l-1}^merged, W_l^x z_{l-1}^x)
  MeanCosine merged_input_cos_a;
  MeanCosine merged_input_cos_b;
};

std::vector<RoLayerStat> reciprocal_orthogonality_diagnostic(
    const ParamSet& a, const ParamSet& b, double lambda, const Dataset& d);

/// Mean over the data of dist(Wa za + Wb zb, Wa zb + Wb za) per layer with
/// dist(x, y) = ||x - y||^2 / (||x|| ||y||); layers 1..L.
std::vector<MeanCosine> commutativity_diagnostic(const ParamSet& a,
                                                 const ParamSet& b,
                                                 const Dataset& d);

/// Per-dimension standard deviation of pre-activations about zero,
/// sqrt(mean z^2), for each ReLU layer, plus the fraction of dimensions
/// below one hundredth of the layer maximum.
struct PreactLayerStats {
  std::vector<double> std_about_zero;
  double small_std_fraction = 0.0;
  bool degenerate = false;  // max std below 1e-12; fraction forced to 1
};

std::vector<PreactLayerStats> preactivation_stats(const ParamSet& p,
                                                  const Dataset& d);

/// 1 - |A intersect B| / min(|A|, |B|) over the high-variance dimension sets
/// of the two models, per ReLU layer. Undefined when min(|A|, |B|) == 0.
struct OverlapStat {
  double nonoverlap_fraction = 0.0;
  bool defined = false;
};

enum class OverlapMode { min_normalized, jaccard_distance };

std::vector<OverlapStat> overlap_stats(const ParamSet& a, const ParamSet& b,
                                       const Dataset& d,
                                       OverlapMode mode = OverlapMode::min_normalized);

struct RankLayerStat {
  double stable_rank = 0.0;   // ||W||_F^2 / sigma_max^2
  std::size_t eps_rank = 0;   // #{sigma_i > 0.01 sigma_max}
  std::size_t width = 0;      // min(rows, cols): largest attainable rank
};

std::vector<RankLayerStat> rank_profile(const ParamSet& p);

/// Constructs a bias-free pair occupying disjoint halves of every hidden
/// layer: model a lives in the first half, model b in the second. The pair
/// is reciprocally orthogonal and ReLU-additive by construction, so the
/// exponentially weighted layer decomposition holds exactly. Requires even
/// hidden dims.
std::pair<ParamSet, ParamSet> build_lewc_pair(const Arch& arch, Rng& rng);

// ---------------------------------------------------------------------------
// Aggregated report for a model pair (JSON emission lives in report_io).
// ---------------------------------------------------------------------------

struct DiagnosticsReport {
  double lambda = 0.5;
  Arch arch;
  double width_multiplier = 1.0;
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;

  std::vector<MeanCosine> lewc_cos;              // layers 1..L
  std::vector<MeanCosine> relu_add_cos;          // layers 1..L-1
  std::vector<RoLayerStat> ro;                   // layers 2..L
  std::vector<MeanCosine> commutativity_dist;    // layers 1..L
  std::vector<PreactLayerStats> preact_a;        // layers 1..L-1
  std::vector<PreactLayerStats> preact_b;
  std::vector<OverlapStat> overlap;              // layers 1..L-1
  std::vector<RankLayerStat> rank_a;             // layers 1..L
  std::vector<RankLayerStat> rank_b;
};

DiagnosticsReport diagnostics_report(const ParamSet& a, const ParamSet& b,
                                     double lambda, const Dataset& d,
                                     CosineAggregation agg =
                                         CosineAggregation::per_sample_mean,
                                     OverlapMode overlap_mode =
                                         OverlapMode::min_normalized);

/// Logits of p over every row of d (streamed in batches).
Matrix logits_of(const ParamSet& p, const Dataset& d);

/// Mean softmax cross-entropy of beta-scaled logits over the given rows.
double mean_nll(const Matrix& logits, std::span<const int> labels,
                std::span<const std::size_t> rows, double beta);

}  // namespace lmc
