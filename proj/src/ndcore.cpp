#include "lmc/ndcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lmc {

double dot(std::span<const double> u, std::span<const double> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double norm2(std::span<const double> u) {
  double acc = 0.0;
  for (double x : u) acc += x * x;
  return std::sqrt(acc);
}

Vector matvec(const Matrix& m, const Vector& v) {
  require(m.cols == v.dim(), "matvec: dimension mismatch");
  Vector out(m.rows);
  matvec_into(m, v.span(), out.span());
  return out;
}

void matvec_into(const Matrix& m, std::span<const double> v,
                 std::span<double> out) {
  const double* a = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = a + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

Vector relu(const Vector& v) {
  Vector out(v.dim());
  relu_into(v.span(), out.span());
  return out;
}

void relu_into(std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
}

CosineResult cosine_similarity_checked(std::span<const double> u,
                                       std::span<const double> v, double tol) {
  require(u.size() == v.size(), "cosine_similarity: dimension mismatch");
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu < tol || nv < tol) return {0.0, true};
  double c = dot(u, v) / (nu * nv);
  c = std::min(1.0, std::max(-1.0, c));
  return {c, false};
}

double cosine_similarity(const Vector& u, const Vector& v) {
  return cosine_similarity_checked(u.span(), v.span()).value;
}

std::vector<double> singular_values(const Matrix& m) {
  for (double x : m.data) {
    require(std::isfinite(x), "singular_values: non-finite entry");
  }
  // One-sided Jacobi on columns; work on the transpose when that makes the
  // column dimension the smaller one (singular values are shared).
  Matrix a = m.rows >= m.cols ? m : m.transposed();
  const std::size_t n = a.cols;
  const std::size_t rows = a.rows;
  constexpr int kMaxSweeps = 100;
  constexpr double kOrthTol = 1e-14;

  auto col_dot = [&](std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += a.at(r, p) * a.at(r, q);
    return acc;
  };

  bool converged = n < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double app = col_dot(p, p);
        const double aqq = col_dot(q, q);
        const double apq = col_dot(p, q);
        if (std::abs(apq) <= kOrthTol * std::sqrt(app * aqq)) continue;
        converged = false;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double xp = a.at(r, p);
          const double xq = a.at(r, q);
          a.at(r, p) = c * xp - s * xq;
          a.at(r, q) = s * xp + c * xq;
        }
      }
    }
  }
  if (!converged) {
    throw std::runtime_error("singular_values: Jacobi sweeps did not converge");
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += a.at(r, j) * a.at(r, j);
    sv[j] = std::sqrt(acc);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

double softmax_xent(std::span<const double> logits, std::size_t label,
                    double scale) {
  require(label < logits.size(), "softmax_xent: label out of range");
  double mx = scale * logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) {
    mx = std::max(mx, scale * logits[i]);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(scale * z - mx);
  const double lse = mx + std::log(sum);
  const double loss = lse - scale * logits[label];
  // Clamp only the tiny negative rounding residue; NaN must pass through so
  // divergence stays visible.
  return loss < 0.0 ? 0.0 : loss;
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double ipow(double x, std::size_t n) {
  double acc = 1.0;
  for (std::size_t i = 0; i < n; ++i) acc *= x;
  return acc;
}

}  // namespace lmc
