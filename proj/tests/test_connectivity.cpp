#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lmc/connectivity.hpp"
#include "lmc/ndcore.hpp"
#include "lmc/symmetry.hpp"

using namespace lmc;

namespace {

std::pair<Dataset, Dataset> blob_pair(std::uint64_t seed,
                                      std::size_t n_train = 768,
                                      std::size_t n_test = 384,
                                      std::size_t dim = 8,
                                      std::size_t classes = 4,
                                      double sep = 6.0) {
  Rng rng(seed);
  const Dataset all = synth_blobs(rng, n_train + n_test, dim, classes, sep);
  std::vector<std::size_t> head(n_train), tail(n_test);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), n_train);
  return {all.subset(head, "train"), all.subset(tail, "test")};
}

ParamSet random_params(const std::vector<std::size_t>& dims, std::uint64_t seed,
                       bool with_bias = true) {
  Arch a;
  a.layer_dims = dims;
  a.with_bias = with_bias;
  Rng rng(seed);
  return init(a, rng);
}

/// Calibrated logits: z ~ N(0, I) per row, label sampled from softmax(z).
/// The optimal inverse temperature of this population is 1.
std::pair<Matrix, std::vector<int>> calibrated_logits(std::size_t n,
                                                      std::size_t classes,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  Matrix logits(n, classes);
  std::vector<int> labels(n);
  std::vector<double> probs(classes);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    for (auto& z : row) z = rng.normal();
    softmax_into(row, probs);
    double u = rng.uniform();
    std::size_t pick = classes - 1;
    for (std::size_t k = 0; k < classes; ++k) {
      if (u < probs[k]) {
        pick = k;
        break;
      }
      u -= probs[k];
    }
    labels[i] = static_cast<int>(pick);
  }
  return {std::move(logits), std::move(labels)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Temperature calibration
// ---------------------------------------------------------------------------

TEST_CASE("temperature fit recovers a doubled logit scale") {
  auto [logits, labels] = calibrated_logits(20000, 5, 31);

  Rng fit_rng(1);
  const TemperatureFit base = fit_temperature(logits, labels, 0.2, fit_rng);
  CHECK(base.beta == doctest::Approx(1.0).epsilon(0.04));

  Matrix doubled = logits;
  for (auto& z : doubled.data) z *= 2.0;
  Rng fit_rng2(1);
  const TemperatureFit fit = fit_temperature(doubled, labels, 0.2, fit_rng2);
  CHECK(fit.beta >= 0.48);
  CHECK(fit.beta <= 0.52);
  // beta * 2 * logits recovers the original NLL
  CHECK(fit.nll_after == doctest::Approx(base.nll_after).epsilon(1e-3));
}

TEST_CASE("perfectly calibrated logits keep beta near one") {
  auto [logits, labels] = calibrated_logits(20000, 4, 57);
  Rng fit_rng(9);
  const TemperatureFit fit = fit_temperature(logits, labels, 0.2, fit_rng);
  CHECK(fit.beta == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.nll_after == doctest::Approx(fit.nll_before).epsilon(0.01));
}

TEST_CASE("calibration never worsens the calibration split") {
  for (std::uint64_t seed : {3ULL, 4ULL, 5ULL, 6ULL}) {
    Rng rng(seed);
    Matrix logits(500, 6);
    std::vector<int> labels(500);
    for (auto& z : logits.data) z = 3.0 * rng.normal();
    for (auto& l : labels) l = static_cast<int>(rng.bounded(6));
    Rng fit_rng(seed);
    const TemperatureFit fit = fit_temperature(logits, labels, 0.2, fit_rng);
    CHECK(fit.nll_after_cal <= fit.nll_before_cal + 1e-12);
  }
}

TEST_CASE("scaling logits never changes predictions") {
  auto [logits, labels] = calibrated_logits(2000, 7, 13);
  auto acc_of = [&](double beta) {
    std::size_t hits = 0;
    std::vector<double> scaled(7);
    for (std::size_t i = 0; i < logits.rows; ++i) {
      auto row = logits.row(i);
      for (std::size_t k = 0; k < 7; ++k) scaled[k] = beta * row[k];
      if (argmax_lowest(scaled) == static_cast<std::size_t>(labels[i])) ++hits;
    }
    return hits;
  };
  const std::size_t base = acc_of(1.0);
  for (double beta : {0.01, 0.3, 2.0, 55.0}) {
    CHECK(acc_of(beta) == base);
  }
}

TEST_CASE("temperature fit rejects bad inputs") {
  Matrix logits(1, 3);
  std::vector<int> labels = {0};
  Rng rng(1);
  CHECK_THROWS_AS(fit_temperature(logits, labels, 0.2, rng),
                  std::invalid_argument);
  Matrix more(10, 3);
  std::vector<int> more_labels(10, 0);
  CHECK_THROWS_AS(fit_temperature(more, more_labels, 0.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_temperature(more, more_labels, 1.0, rng),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Barrier curves
// ---------------------------------------------------------------------------

TEST_CASE("barrier of a model against itself is exactly zero") {
  const auto [train_set, test_set] = blob_pair(11);
  const ParamSet a = random_params({8, 16, 4}, 21);
  BarrierConfig cfg;
  cfg.grid = 9;
  const BarrierCurve curve = barrier_curve(a, a, train_set, test_set, cfg);
  CHECK(curve.barrier_raw_train == 0.0);
  CHECK(curve.barrier_raw_test == 0.0);
  for (const auto& pt : curve.points) {
    CHECK(pt.train_loss == curve.points.front().train_loss);
    CHECK(pt.test_loss == curve.points.front().test_loss);
  }
}

TEST_CASE("barrier is symmetric under swapping the endpoints") {
  const auto [train_set, test_set] = blob_pair(13);
  const ParamSet a = random_params({8, 12, 4}, 31);
  const ParamSet b = random_params({8, 12, 4}, 32);
  BarrierConfig cfg;
  cfg.grid = 11;
  const BarrierCurve ab = barrier_curve(a, b, train_set, test_set, cfg);
  const BarrierCurve ba = barrier_curve(b, a, train_set, test_set, cfg);
  CHECK(ab.barrier_raw_train == ba.barrier_raw_train);
  CHECK(ab.barrier_raw_test == ba.barrier_raw_test);
  // the curves mirror point by point
  const std::size_t m = ab.points.size();
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(ab.points[i].test_loss == ba.points[m - 1 - i].test_loss);
  }
}

TEST_CASE("two-point grid has zero barrier by construction") {
  const auto [train_set, test_set] = blob_pair(17);
  const ParamSet a = random_params({8, 10, 4}, 41);
  const ParamSet b = random_params({8, 10, 4}, 42);
  BarrierConfig cfg;
  cfg.grid = 2;
  const BarrierCurve curve = barrier_curve(a, b, train_set, test_set, cfg);
  CHECK(curve.points.size() == 2);
  CHECK(curve.barrier_raw_train == 0.0);
  CHECK(curve.barrier_raw_test == 0.0);
}

TEST_CASE("barrier grid always contains the midpoint") {
  const auto [train_set, test_set] = blob_pair(19, 128, 64);
  const ParamSet a = random_params({8, 6, 4}, 51);
  const ParamSet b = random_params({8, 6, 4}, 52);
  BarrierConfig cfg;
  cfg.grid = 4;  // even: 0.5 not on the uniform grid, gets inserted
  const BarrierCurve curve = barrier_curve(a, b, train_set, test_set, cfg);
  bool has_mid = false;
  for (const auto& pt : curve.points) {
    if (pt.lambda == 0.5) has_mid = true;
  }
  CHECK(has_mid);

  Arch other;
  other.layer_dims = {8, 7, 4};
  Rng rng(1);
  const ParamSet c = init(other, rng);
  CHECK_THROWS_AS(barrier_curve(a, c, train_set, test_set, cfg),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

TEST_CASE("ensemble at the endpoints reduces to plain evaluation") {
  const auto [train_set, test_set] = blob_pair(23);
  const ParamSet a = random_params({8, 16, 4}, 61);
  const ParamSet b = random_params({8, 16, 4}, 62);
  const EvalResult ea = evaluate(a, test_set);
  const EvalResult eb = evaluate(b, test_set);
  const EvalResult at1 = ensemble_eval(a, b, 1.0, 3, test_set);
  const EvalResult at0 = ensemble_eval(a, b, 0.0, 3, test_set);
  CHECK(at1.loss == ea.loss);
  CHECK(at1.accuracy == ea.accuracy);
  CHECK(at0.loss == eb.loss);
  CHECK(at0.accuracy == eb.accuracy);
}

TEST_CASE("ensemble weights follow lambda^L normalization") {
  // Bias-only single-layer nets have constant logits equal to the bias, so
  // the ensemble's logits are exactly the weighted bias mix.
  Arch a;
  a.layer_dims = {2, 3};
  ParamSet pa, pb;
  pa.arch = pb.arch = a;
  pa.weights = {Matrix(3, 2)};
  pb.weights = {Matrix(3, 2)};
  pa.biases = {Vector{2.0, 0.0, -1.0}};
  pb.biases = {Vector{0.0, 4.0, 1.0}};

  Dataset d;
  d.images = Matrix(4, 2);
  d.labels = {0, 1, 2, 0};
  d.num_classes = 3;
  d.name = "fixed";

  // lambda = 0.75, L = 4: weights are (0.75^4, 0.25^4) normalized,
  // i.e. 81/82 and 1/82.
  const double wa = 81.0 / 82.0;
  const double wb = 1.0 / 82.0;
  Vector mixed(3);
  for (std::size_t k = 0; k < 3; ++k) {
    mixed[k] = wa * pa.biases[0][k] + wb * pb.biases[0][k];
  }
  double want_loss = 0.0;
  std::size_t want_hits = 0;
  for (int label : d.labels) {
    want_loss += softmax_xent(mixed.span(), static_cast<std::size_t>(label));
    want_hits +=
        argmax_lowest(mixed.span()) == static_cast<std::size_t>(label) ? 1 : 0;
  }
  want_loss /= 4.0;

  const EvalResult got = ensemble_eval(pa, pb, 0.75, 4, d);
  CHECK(got.loss == doctest::Approx(want_loss).epsilon(1e-12));
  CHECK(got.accuracy == doctest::Approx(want_hits / 4.0));

  // lambda = 0.5 gives equal weights for any depth
  Vector half(3);
  for (std::size_t k = 0; k < 3; ++k) {
    half[k] = 0.5 * (pa.biases[0][k] + pb.biases[0][k]);
  }
  double half_loss = 0.0;
  for (int label : d.labels) {
    half_loss += softmax_xent(half.span(), static_cast<std::size_t>(label));
  }
  half_loss /= 4.0;
  const EvalResult got_half = ensemble_eval(pa, pb, 0.5, 7, d);
  CHECK(got_half.loss == doctest::Approx(half_loss).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// The constructed pair: exact layerwise decomposition
// ---------------------------------------------------------------------------

TEST_CASE("constructed pair satisfies the exact layer decomposition") {
  Arch arch;
  arch.layer_dims = {16, 32, 32, 6};
  arch.with_bias = false;
  Rng rng(71);
  const auto [a, b] = build_lewc_pair(arch, rng);

  // reciprocal orthogonality holds exactly: each model's activations fall
  // in the kernel of the other's next-layer weights
  Rng drng(72);
  Dataset d;
  d.images = Matrix(64, 16);
  for (auto& x : d.images.data) x = drng.normal();
  d.labels.assign(64, 0);
  d.num_classes = 6;
  d.name = "gauss";

  const auto ro = reciprocal_orthogonality_diagnostic(a, b, 0.5, d);
  for (const auto& layer : ro) {
    CHECK(layer.norm_ratio_ab == 0.0);
    CHECK(layer.norm_ratio_ba == 0.0);
  }

  // layerwise cosine is 1 at every layer for a range of lambdas
  for (double lambda : {0.25, 0.5, 0.75}) {
    const auto lewc = lewc_diagnostic(a, b, lambda, d);
    for (const auto& layer : lewc) {
      REQUIRE(layer.defined());
      CHECK(layer.mean == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  // merged logits equal the lambda^L weighted sum elementwise
  const double lambda = 0.3;
  const ParamSet merged = interpolate(a, b, lambda);
  const ActivationTrace tm = forward_trace(merged, d.images);
  const ActivationTrace ta = forward_trace(a, d.images);
  const ActivationTrace tb = forward_trace(b, d.images);
  const double wl_a = ipow(lambda, arch.depth());
  const double wl_b = ipow(1.0 - lambda, arch.depth());
  double max_dev = 0.0;
  for (std::size_t i = 0; i < tm.logits().data.size(); ++i) {
    const double want = wl_a * ta.logits().data[i] + wl_b * tb.logits().data[i];
    max_dev = std::max(max_dev, std::abs(tm.logits().data[i] - want));
  }
  CHECK(max_dev < 1e-9);

  // merged accuracy at 0.5 equals the equal-weight ensemble exactly
  Rng lrng(73);
  for (auto& l : d.labels) l = static_cast<int>(lrng.bounded(6));
  const EvalResult merged_eval = evaluate(interpolate(a, b, 0.5), d);
  const EvalResult ens = ensemble_eval(a, b, 0.5, arch.depth(), d);
  CHECK(merged_eval.accuracy == ens.accuracy);
}

TEST_CASE("constructed pair rejects bad architectures") {
  Arch odd;
  odd.layer_dims = {8, 15, 4};
  odd.with_bias = false;
  Rng rng(1);
  CHECK_THROWS_AS(build_lewc_pair(odd, rng), std::invalid_argument);

  Arch biased;
  biased.layer_dims = {8, 16, 4};
  biased.with_bias = true;
  CHECK_THROWS_AS(build_lewc_pair(biased, rng), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Layer diagnostics on simple cases
// ---------------------------------------------------------------------------

TEST_CASE("identical models score perfectly on every diagnostic") {
  const auto [train_set, test_set] = blob_pair(29);
  const ParamSet a = random_params({8, 16, 16, 4}, 81);

  const auto lewc = lewc_diagnostic(a, a, 0.5, test_set);
  for (const auto& l : lewc) {
    CHECK(l.mean == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto add = relu_additivity_diagnostic(a, a, test_set);
  for (const auto& l : add) {
    CHECK(l.mean == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto ro = reciprocal_orthogonality_diagnostic(a, a, 0.5, test_set);
  for (const auto& l : ro) {
    CHECK(l.norm_ratio_ab == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l.merged_input_cos_a.mean == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto comm = commutativity_diagnostic(a, a, test_set);
  for (const auto& l : comm) {
    CHECK(l.mean == doctest::Approx(0.0).epsilon(1e-12));
  }
  const auto overlap = overlap_stats(a, a, test_set);
  for (const auto& l : overlap) {
    if (l.defined) CHECK(l.nonoverlap_fraction == 0.0);
  }
}

TEST_CASE("relu additivity is exact on disjoint supports") {
  Arch arch;
  arch.layer_dims = {10, 24, 24, 4};
  arch.with_bias = false;
  Rng rng(91);
  const auto [a, b] = build_lewc_pair(arch, rng);

  Rng drng(92);
  Dataset d;
  d.images = Matrix(32, 10);
  for (auto& x : d.images.data) x = drng.normal();
  d.labels.assign(32, 0);
  d.num_classes = 4;

  const auto add = relu_additivity_diagnostic(a, b, d);
  for (const auto& l : add) {
    REQUIRE(l.defined());
    CHECK(l.mean == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("relu additivity on gaussian pre-activations hits the limit") {
  // Bias-only models: every sample sees the same Gaussian pre-activation
  // pair, so the diagnostic evaluates the high-dimensional cosine.
  const std::size_t dim = 100000;
  Arch arch;
  arch.layer_dims = {2, dim, 3};
  ParamSet a, b;
  a.arch = b.arch = arch;
  a.weights = {Matrix(dim, 2), Matrix(3, dim)};
  b.weights = {Matrix(dim, 2), Matrix(3, dim)};
  Rng rng(101);
  Vector ba(dim), bb(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    ba[i] = rng.normal();
    bb[i] = rng.normal();
  }
  a.biases = {ba, Vector(3)};
  b.biases = {bb, Vector(3)};

  Dataset d;
  d.images = Matrix(2, 2);
  d.labels = {0, 1};
  d.num_classes = 3;

  const auto add = relu_additivity_diagnostic(a, b, d);
  const double limit = (0.75 + 1.0 / M_PI) / std::sqrt(1.0 + 1.0 / M_PI);
  CHECK(add[0].mean == doctest::Approx(limit).epsilon(0.01));
}

TEST_CASE("commutativity vanishes when weights agree") {
  // Shared weights, different biases: the two sides of the balance factor
  // as (Wa - Wb)(za - zb) = 0 even though the activations differ.
  Arch arch;
  arch.layer_dims = {6, 12, 12, 3};
  Rng rng(111);
  ParamSet a = init(arch, rng);
  ParamSet b = a;
  for (auto& bias : b.biases) {
    for (auto& x : bias.data) x += rng.uniform(-0.5, 0.5);
  }

  const auto [train_set, test_set] = blob_pair(31, 256, 128, 6, 3);
  const auto comm = commutativity_diagnostic(a, b, test_set);
  for (const auto& l : comm) {
    CHECK(l.mean == doctest::Approx(0.0).epsilon(1e-12));
  }

  // bias-free: exactly zero
  Arch nf = arch;
  nf.with_bias = false;
  Rng rng2(112);
  ParamSet na = init(nf, rng2);
  const auto comm2 = commutativity_diagnostic(na, na, test_set);
  for (const auto& l : comm2) CHECK(l.mean == 0.0);
}

TEST_CASE("preactivation stats: degenerate and one-live-unit layers") {
  Arch arch;
  arch.layer_dims = {5, 8, 3};
  ParamSet p;
  p.arch = arch;
  p.weights = {Matrix(8, 5), Matrix(3, 8)};
  p.biases = {Vector(8), Vector(3)};

  const auto [train_set, test_set] = blob_pair(37, 128, 64, 5, 3);

  // all-zero weights: degenerate layer, fraction pinned to 1
  const auto zero_stats = preactivation_stats(p, test_set);
  REQUIRE(zero_stats.size() == 1);
  CHECK(zero_stats[0].degenerate);
  CHECK(zero_stats[0].small_std_fraction == 1.0);

  // one live unit: the other d-1 dims sit below the threshold
  for (std::size_t j = 0; j < 5; ++j) p.weights[0].at(2, j) = 1.0;
  const auto one_live = preactivation_stats(p, test_set);
  CHECK(!one_live[0].degenerate);
  CHECK(one_live[0].small_std_fraction == doctest::Approx(7.0 / 8.0));
}

TEST_CASE("overlap is one on disjoint constructed supports") {
  Arch arch;
  arch.layer_dims = {10, 16, 16, 4};
  arch.with_bias = false;
  Rng rng(121);
  const auto [a, b] = build_lewc_pair(arch, rng);

  Rng drng(122);
  Dataset d;
  d.images = Matrix(64, 10);
  for (auto& x : d.images.data) x = drng.normal();
  d.labels.assign(64, 0);
  d.num_classes = 4;

  const auto overlap = overlap_stats(a, b, d);
  for (const auto& l : overlap) {
    REQUIRE(l.defined);
    CHECK(l.nonoverlap_fraction == 1.0);
  }
}

TEST_CASE("rank profile: identity and rank-one") {
  Arch arch;
  arch.layer_dims = {6, 6, 6};
  ParamSet p;
  p.arch = arch;
  p.weights = {Matrix::identity(6), Matrix(6, 6)};
  p.biases = {Vector(6), Vector(6)};
  Rng rng(131);
  Vector u(6), v(6);
  for (std::size_t i = 0; i < 6; ++i) {
    u[i] = rng.normal();
    v[i] = rng.normal();
  }
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) p.weights[1].at(i, j) = u[i] * v[j];

  const auto ranks = rank_profile(p);
  REQUIRE(ranks.size() == 2);
  CHECK(ranks[0].stable_rank == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(ranks[0].eps_rank == 6);
  CHECK(ranks[0].width == 6);
  CHECK(ranks[1].stable_rank == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ranks[1].eps_rank == 1);
}

TEST_CASE("diagnostics report carries every block") {
  const auto [train_set, test_set] = blob_pair(41, 256, 128);
  const ParamSet a = random_params({8, 12, 12, 4}, 141);
  const ParamSet b = random_params({8, 12, 12, 4}, 142);
  const DiagnosticsReport r = diagnostics_report(a, b, 0.5, test_set);
  CHECK(r.lewc_cos.size() == 3);
  CHECK(r.relu_add_cos.size() == 2);
  CHECK(r.ro.size() == 2);
  CHECK(r.commutativity_dist.size() == 3);
  CHECK(r.preact_a.size() == 2);
  CHECK(r.overlap.size() == 2);
  CHECK(r.rank_a.size() == 3);
  for (const auto& l : r.lewc_cos) {
    CHECK(l.mean >= -1.0);
    CHECK(l.mean <= 1.0);
  }
  for (const auto& l : r.ro) {
    CHECK(l.norm_ratio_ab >= 0.0);
    CHECK(l.norm_ratio_ba >= 0.0);
  }
}

TEST_CASE("width trends at desk scale: cross-norm ratios and random perms") {
  Rng drng(31);
  const Dataset all = synth_blobs(drng, 3072, 12, 4, 4.0);
  std::vector<std::size_t> head(2048), tail(1024);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), std::size_t{2048});
  const Dataset train_set = all.subset(head, "tr");
  const Dataset test_set = all.subset(tail, "te");

  TrainConfig tc;
  tc.lr = 1e-2;
  tc.epochs = 10;
  tc.batch_size = 128;
  tc.weight_decay = 3e-3;

  auto trained_pair = [&](std::size_t width) {
    Arch arch;
    arch.layer_dims = {12, width, width, 4};
    tc.seed = 21;
    const Checkpoint ca = train(arch, tc, train_set, test_set);
    tc.seed = 22;
    const Checkpoint cb = train(arch, tc, train_set, test_set);
    return std::pair<ParamSet, ParamSet>{ca.params, cb.params};
  };
  const auto [na, nb] = trained_pair(12);
  const auto [wa, wb] = trained_pair(48);

  // cross-application norm ratios shrink as the models widen
  const auto ro_narrow = reciprocal_orthogonality_diagnostic(na, nb, 0.5, test_set);
  const auto ro_wide = reciprocal_orthogonality_diagnostic(wa, wb, 0.5, test_set);
  REQUIRE(ro_narrow.size() == ro_wide.size());
  for (std::size_t l = 0; l < ro_wide.size(); ++l) {
    CHECK(ro_wide[l].norm_ratio_ab < ro_narrow[l].norm_ratio_ab);
    CHECK(ro_wide[l].norm_ratio_ba < ro_narrow[l].norm_ratio_ba);
  }

  // at the wide end, random permutations barely move the merged accuracy
  const double none_acc =
      evaluate(interpolate(wa, wb, 0.5), test_set).accuracy;
  Rng prng(921);
  for (int t = 0; t < 5; ++t) {
    Arch arch;
    arch.layer_dims = {12, 48, 48, 4};
    const Permutation qa = random_permutation(arch, prng);
    const Permutation qb = random_permutation(arch, prng);
    const double acc =
        evaluate(interpolate(apply(qa, wa), apply(qb, wb), 0.5), test_set)
            .accuracy;
    CHECK(std::abs(acc - none_acc) <= 0.08);
    CHECK(acc > 0.8);  // far above the 0.25 chance level
  }
}
