#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmc/dense.hpp"
#include "lmc/mlp.hpp"
#include "lmc/rng.hpp"

namespace lmc {

/// Per-hidden-layer unit permutations. hidden[h][i] is the OLD index of the
/// unit placed at new index i; input and output layers are never permuted.
struct Permutation {
  std::vector<std::vector<std::uint32_t>> hidden;

  static Permutation identity(const Arch& arch);
  void validate(const Arch& arch) const;
  bool is_identity() const;

  Permutation inverse() const;

  /// Permutation equivalent to applying `first`, then `*this`.
  Permutation after(const Permutation& first) const;
};

/// pi applied to p: rows of W_h and entries of b_h gathered by pi_h, columns
/// of W_{h+1} gathered by pi_h. Function-preserving by construction.
ParamSet apply(const Permutation& pi, const ParamSet& p);

/// Uniform per-layer permutations (Fisher-Yates), deterministic by seed.
Permutation random_permutation(const Arch& arch, Rng& rng);

struct WeightMatchResult {
  Permutation perm;
  /// param_distance(a, apply(perm, b)) after each completed sweep.
  std::vector<double> sweep_distances;
  std::size_t sweeps = 0;
};

/// Weight matching: coordinate descent over hidden layers, each step solving
/// an exact linear assignment that maximizes alignment of the adjacent
/// weight blocks (and bias) while the other layers stay fixed. Layer order
/// is reshuffled per sweep from rng; stops when a sweep changes nothing or
/// at max_sweeps. The L2 objective never increases across sweeps.
WeightMatchResult weight_match(const ParamSet& a, const ParamSet& b, Rng& rng,
                               std::size_t max_sweeps = 50);

/// Exact minimum-cost assignment on a square cost matrix (shortest
/// augmenting path). Returns row -> column. Ties resolve deterministically
/// by scan order (lowest index first).
std::vector<std::size_t> assignment_solve(const Matrix& cost);

/// Sidecar container (same header + payload + crc scheme as checkpoints).
void save_permutation(const Permutation& pi, const std::string& path);
Permutation load_permutation(const std::string& path);

}  // namespace lmc
