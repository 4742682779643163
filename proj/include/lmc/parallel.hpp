#pragma once

#include <cstddef>

namespace lmc {

/// Parallel map over [0, n). Each index must write only its own outputs;
/// results are then independent of thread count and schedule. Reductions
/// are done by the caller as an ordered serial fold over per-index slots.
template <class F>
void parallel_for(std::size_t n, F&& f) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    f(static_cast<std::size_t>(i));
  }
}

}  // namespace lmc
