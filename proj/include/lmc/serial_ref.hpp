#pragma once

#include <span>

#include "lmc/mlp.hpp"

namespace lmc {

// Straight single-threaded reference implementations of the parallel
// kernels. Tests compare them against the OpenMP paths; the benchmark
// target reports the speedup. Kept deliberately plain.

ActivationTrace forward_trace_serial(const ParamSet& p, const Matrix& batch);

BackwardResult backward_serial(const ParamSet& p, const Matrix& batch,
                               std::span<const int> labels);

}  // namespace lmc
