#pragma once

#include <cstdint>
#include <vector>

namespace lmc {

/// Deterministic random number generator: xoshiro256++ seeded through
/// splitmix64. The integer stream depends only on the seed, so identical
/// seeds give identical streams on every platform. No global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via the Marsaglia polar method (one spare cached).
  double normal();

  /// Unbiased integer in [0, n) by rejection sampling. n must be > 0.
  std::uint64_t bounded(std::uint64_t n);

  /// Fresh generator for an independent stream, keyed by (seed, stream).
  /// Used to give parallel workers reproducible per-index streams.
  Rng derive(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i + 1));
      T tmp = v[i];
      v[i] = v[j];
      v[j] = tmp;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lmc
