#pragma once

#include <cstdint>
#include <vector>

#include "lmc/rng.hpp"

namespace lmc {

/// One Monte Carlo estimate with its standard error, versus the closed form
/// when one exists (z_score = (estimate - analytic) / std_error).
struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double analytic = 0.0;
  bool has_analytic = false;
  double z_score = 0.0;
};

/// Bernstein sub-exponential norm bound entering the concentration rate.
inline constexpr double kBernsteinK = 32.0 / 3.0;

/// E[relu(x) relu(y)] for zero-mean unit-variance Gaussians with
/// correlation rho: (rho + (2/pi)(sqrt(1-rho^2) + rho asin rho)) / 4.
double relu_product_expectation(double rho);

/// E[|x||y|] for the same pair: (2/pi)(sqrt(1-rho^2) + rho asin rho).
double abs_product_expectation(double rho);

/// The high-dimensional limit of cos(relu(u) + relu(v), relu(u + v)) for
/// iid standard Gaussian vectors: (3/4 + 1/pi) / sqrt(1 + 1/pi).
double relu_cosine_limit();

struct ReluProductMc {
  McResult relu_product;   // E[relu(x) relu(y)]
  McResult cross_term;     // E[x |y|], analytically zero
  McResult abs_product;    // E[|x| |y|]
};

/// Samples correlated pairs (y, x = rho y + sqrt(1-rho^2) g) and estimates
/// the three moments above with standard errors. n must be >= 1000.
ReluProductMc mc_relu_product(double rho, std::size_t n, Rng& rng);

struct CosineConcentration {
  std::vector<double> trial_cosines;
  McResult mean;           // across trials; analytic = relu_cosine_limit()
  double spread = 0.0;     // sample standard deviation across trials
  double max_abs_dev = 0.0;
  double analytic_limit = 0.0;
  std::size_t dim = 0;
};

/// Per trial draws u, v ~ N(0, I_d) and evaluates
/// cos(relu(u) + relu(v), relu(u + v)). Trials run in parallel with
/// per-trial derived seeds, so results do not depend on scheduling.
CosineConcentration mc_cosine_concentration(std::size_t d, std::size_t trials,
                                            Rng& rng);

/// Single-threaded reference for the benchmark and cross-checks.
CosineConcentration mc_cosine_concentration_serial(std::size_t d,
                                                   std::size_t trials,
                                                   Rng& rng);

struct ConcentrationBound {
  double epsilon = 0.0;
  double lower = 0.0;
  double upper = 0.0;  // +inf once epsilon makes the denominator vanish
};

/// Evaluates the deviation bound at equality,
/// epsilon = K max(sqrt(log(2/delta)/(c d)), log(2/delta)/(c d)),
/// and the two-sided cosine bounds at that epsilon. The absolute constant c
/// of the Bernstein inequality is supplied by the caller.
ConcentrationBound concentration_bound(std::size_t d, double delta, double c);

}  // namespace lmc
