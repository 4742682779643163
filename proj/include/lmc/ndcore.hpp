#pragma once

#include <span>
#include <vector>

#include "lmc/dense.hpp"
#include "lmc/rng.hpp"

namespace lmc {

// ---------------------------------------------------------------------------
// Elementwise and reduction primitives. All pure; inputs are never modified.
// ---------------------------------------------------------------------------

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> u);

/// m (rows x cols) times v (cols). Throws on dimension mismatch.
Vector matvec(const Matrix& m, const Vector& v);

/// out[i] = sum_j m(i,j) * v[j], raw-span variant used by inner loops.
void matvec_into(const Matrix& m, std::span<const double> v,
                 std::span<double> out);

/// Elementwise max(0, x).
Vector relu(const Vector& v);
void relu_into(std::span<const double> v, std::span<double> out);

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // a norm fell below tolerance; value forced to 0
};

/// Cosine similarity clamped to [-1, 1]. When either norm is below `tol`
/// the result is 0 and the sample is flagged so callers can keep it out of
/// averages (dead ReLU activations produce zero vectors).
CosineResult cosine_similarity_checked(std::span<const double> u,
                                       std::span<const double> v,
                                       double tol = 1e-12);
double cosine_similarity(const Vector& u, const Vector& v);

/// Singular values in descending order via one-sided Jacobi rotations,
/// accurate to 1e-8 relative to the largest singular value. Throws if
/// the sweep cap (100) is exceeded or the input has non-finite entries.
std::vector<double> singular_values(const Matrix& m);

/// Cross-entropy of softmax(scale * logits) against `label`, computed in
/// log-sum-exp form. Always >= 0. Throws if label is out of range.
double softmax_xent(std::span<const double> logits, std::size_t label,
                    double scale = 1.0);

/// Softmax probabilities of `logits` written into `out`.
void softmax_into(std::span<const double> logits, std::span<double> out);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax_lowest(std::span<const double> v);

/// x^n by repeated multiplication (exact for powers of two bases).
double ipow(double x, std::size_t n);

}  // namespace lmc
