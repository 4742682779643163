#include "lmc/theoryprobe.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lmc/dense.hpp"
#include "lmc/parallel.hpp"

namespace lmc {

namespace {

constexpr double kPi = std::numbers::pi;

McResult summarize(double sum, double sum_sq, std::size_t n, double analytic,
                   bool has_analytic) {
  McResult r;
  r.n_samples = n;
  r.estimate = sum / static_cast<double>(n);
  const double var =
      (sum_sq / static_cast<double>(n) - r.estimate * r.estimate) *
      static_cast<double>(n) / static_cast<double>(n - 1);
  r.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  r.analytic = analytic;
  r.has_analytic = has_analytic;
  if (has_analytic && r.std_error > 0.0) {
    r.z_score = (r.estimate - analytic) / r.std_error;
  }
  return r;
}

}  // namespace

double abs_product_expectation(double rho) {
  require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
  return (2.0 / kPi) * (std::sqrt(1.0 - rho * rho) + rho * std::asin(rho));
}

double relu_product_expectation(double rho) {
  require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
  return 0.25 * (rho + abs_product_expectation(rho));
}

double relu_cosine_limit() {
  return (0.75 + 1.0 / kPi) / std::sqrt(1.0 + 1.0 / kPi);
}

ReluProductMc mc_relu_product(double rho, std::size_t n, Rng& rng) {
  require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
  require(n >= 1000, "mc_relu_product: need n >= 1000");

  const double mix = std::sqrt(1.0 - rho * rho);
  double s_rr = 0.0, s_rr2 = 0.0;
  double s_xy = 0.0, s_xy2 = 0.0;
  double s_aa = 0.0, s_aa2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = rng.normal();
    const double g = rng.normal();
    const double x = rho * y + mix * g;
    const double rr = (x > 0.0 ? x : 0.0) * (y > 0.0 ? y : 0.0);
    const double xy = x * std::abs(y);
    const double aa = std::abs(x) * std::abs(y);
    s_rr += rr;
    s_rr2 += rr * rr;
    s_xy += xy;
    s_xy2 += xy * xy;
    s_aa += aa;
    s_aa2 += aa * aa;
  }

  ReluProductMc out;
  out.relu_product =
      summarize(s_rr, s_rr2, n, relu_product_expectation(rho), true);
  out.cross_term = summarize(s_xy, s_xy2, n, 0.0, true);
  out.abs_product =
      summarize(s_aa, s_aa2, n, abs_product_expectation(rho), true);
  return out;
}

namespace {

double one_cosine_trial(std::size_t d, Rng rng) {
  double dot_acc = 0.0, nu2 = 0.0, nv2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double u = rng.normal();
    const double v = rng.normal();
    const double sum_relu = (u > 0.0 ? u : 0.0) + (v > 0.0 ? v : 0.0);
    const double s = u + v;
    const double relu_sum = s > 0.0 ? s : 0.0;
    dot_acc += sum_relu * relu_sum;
    nu2 += sum_relu * sum_relu;
    nv2 += relu_sum * relu_sum;
  }
  const double denom = std::sqrt(nu2) * std::sqrt(nv2);
  return denom > 0.0 ? dot_acc / denom : 0.0;
}

CosineConcentration finish_cosine(std::vector<double> cosines, std::size_t d) {
  CosineConcentration out;
  out.dim = d;
  out.analytic_limit = relu_cosine_limit();
  double sum = 0.0, sum_sq = 0.0;
  out.max_abs_dev = 0.0;
  for (double c : cosines) {
    sum += c;
    sum_sq += c * c;
    out.max_abs_dev = std::max(out.max_abs_dev, std::abs(c - out.analytic_limit));
  }
  const std::size_t t = cosines.size();
  out.mean = summarize(sum, sum_sq, t, out.analytic_limit, true);
  const double mean = out.mean.estimate;
  double var = 0.0;
  for (double c : cosines) var += (c - mean) * (c - mean);
  out.spread = t > 1 ? std::sqrt(var / static_cast<double>(t - 1)) : 0.0;
  out.trial_cosines = std::move(cosines);
  return out;
}

}  // namespace

CosineConcentration mc_cosine_concentration(std::size_t d, std::size_t trials,
                                            Rng& rng) {
  require(d >= 1, "mc_cosine_concentration: d must be >= 1");
  require(trials >= 1, "mc_cosine_concentration: trials must be >= 1");
  std::vector<double> cosines(trials);
  parallel_for(trials, [&](std::size_t t) {
    cosines[t] = one_cosine_trial(d, rng.derive(t));
  });
  return finish_cosine(std::move(cosines), d);
}

CosineConcentration mc_cosine_concentration_serial(std::size_t d,
                                                   std::size_t trials,
                                                   Rng& rng) {
  std::vector<double> cosines(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    cosines[t] = one_cosine_trial(d, rng.derive(t));
  }
  return finish_cosine(std::move(cosines), d);
}

ConcentrationBound concentration_bound(std::size_t d, double delta, double c) {
  require(d >= 1, "concentration_bound: d must be >= 1");
  require(delta > 0.0 && delta < 1.0, "concentration_bound: delta in (0,1)");
  require(c > 0.0, "concentration_bound: c must be positive");

  const double log_term = std::log(2.0 / delta) / (c * static_cast<double>(d));
  const double eps = kBernsteinK * std::max(std::sqrt(log_term), log_term);

  ConcentrationBound out;
  out.epsilon = eps;
  const double num = 0.75 + 1.0 / kPi;
  out.lower = (num - eps) / std::sqrt((1.0 + eps) * (1.0 + 1.0 / kPi + eps));
  const double denom_sq = (1.0 - eps) * (1.0 + 1.0 / kPi - eps);
  out.upper = denom_sq > 0.0
                  ? (num + eps) / std::sqrt(denom_sq)
                  : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace lmc
