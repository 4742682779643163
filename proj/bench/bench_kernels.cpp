// Benchmark: OpenMP kernels against their serial references. Each kernel
// runs both ways on identical inputs; the table reports times, speedup and
// the largest numeric deviation between the two paths.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "lmc/mlp.hpp"
#include "lmc/ndcore.hpp"
#include "lmc/serial_ref.hpp"
#include "lmc/theoryprobe.hpp"

using namespace lmc;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    f();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s,
            double max_dev) {
  std::printf("%-28s %10.4fs %10.4fs %7.2fx   max |dev| %.3g\n", name,
              serial_s, parallel_s, serial_s / parallel_s, max_dev);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  Arch arch;
  arch.layer_dims = {784, 512, 512, 512, 10};
  Rng rng(1);
  const ParamSet p = init(arch, rng);
  Matrix batch(512, 784);
  for (auto& x : batch.data) x = rng.uniform();
  std::vector<int> labels(512);
  for (auto& l : labels) l = static_cast<int>(rng.bounded(10));

  // forward pass over a batch
  {
    ActivationTrace ser, par;
    const double ts = time_best_of(3, [&] { ser = forward_trace_serial(p, batch); });
    const double tp = time_best_of(3, [&] { par = forward_trace(p, batch); });
    double dev = 0.0;
    for (std::size_t l = 0; l < ser.pre.size(); ++l) {
      for (std::size_t i = 0; i < ser.pre[l].data.size(); ++i) {
        dev = std::max(dev, std::abs(ser.pre[l].data[i] - par.pre[l].data[i]));
      }
    }
    report("forward_trace", ts, tp, dev);
  }

  // backward pass
  {
    BackwardResult ser, par;
    const double ts = time_best_of(3, [&] { ser = backward_serial(p, batch, labels); });
    const double tp = time_best_of(3, [&] { par = backward(p, batch, labels); });
    double dev = std::abs(ser.mean_loss - par.mean_loss);
    for (std::size_t l = 0; l < ser.grad.weights.size(); ++l) {
      for (std::size_t i = 0; i < ser.grad.weights[l].data.size(); ++i) {
        dev = std::max(dev, std::abs(ser.grad.weights[l].data[i] -
                                     par.grad.weights[l].data[i]));
      }
    }
    report("backward", ts, tp, dev);
  }

  // Monte Carlo cosine trials
  {
    CosineConcentration ser, par;
    Rng r1(7), r2(7);
    const double ts =
        time_best_of(3, [&] { ser = mc_cosine_concentration_serial(400000, 16, r1); });
    const double tp =
        time_best_of(3, [&] { par = mc_cosine_concentration(400000, 16, r2); });
    double dev = 0.0;
    for (std::size_t i = 0; i < ser.trial_cosines.size(); ++i) {
      dev = std::max(dev,
                     std::abs(ser.trial_cosines[i] - par.trial_cosines[i]));
    }
    report("mc_cosine_concentration", ts, tp, dev);
  }

  return 0;
}
