// Timing comparison of the production (OpenMP, blocked-reduction) kernels
// against the serial reference. Build and run:
//   cmake --build build --target bench_kernels && ./build/bench/bench_kernels

#include <chrono>
#include <cstdio>
#include <vector>

#include "gradsurge/kernels.hpp"
#include "gradsurge/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using gradsurge::Rng;
namespace k = gradsurge::kernels;

namespace {

double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

template <typename Fn>
double time_best_of(int reps, Fn fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now();
    fn();
    best = std::min(best, now() - t0);
  }
  return best;
}

volatile double sink;

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("openmp disabled (serial build)\n");
#endif

  Rng rng(99);
  std::printf("%-14s %12s %12s %12s %10s\n", "kernel", "n", "serial_s", "parallel_s", "speedup");

  for (std::size_t n : {1u << 16, 1u << 20, 1u << 23}) {
    std::vector<double> x(n), y(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : y) v = rng.uniform(-1.0, 1.0);
    const double ts = time_best_of(5, [&] { sink = k::serial::dot(x, y); });
    const double tp = time_best_of(5, [&] { sink = k::dot(x, y); });
    std::printf("%-14s %12zu %12.6f %12.6f %9.2fx\n", "dot", n, ts, tp, ts / tp);
  }

  for (std::size_t n : {1u << 20, 1u << 23}) {
    std::vector<double> x(n), y(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const double ts = time_best_of(5, [&] { k::serial::axpy(0.5, x, y); });
    const double tp = time_best_of(5, [&] { k::axpy(0.5, x, y); });
    std::printf("%-14s %12zu %12.6f %12.6f %9.2fx\n", "axpy", n, ts, tp, ts / tp);
  }

  for (int m : {128, 384}) {
    std::vector<double> a(m * m), b(m * m), c(m * m);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    for (double& v : b) v = rng.uniform(-1.0, 1.0);
    const double ts =
        time_best_of(3, [&] { k::serial::matmul(a.data(), b.data(), c.data(), m, m, m); });
    const double tp = time_best_of(3, [&] { k::matmul(a.data(), b.data(), c.data(), m, m, m); });
    std::printf("%-14s %9dx%-3d %12.6f %12.6f %9.2fx\n", "matmul", m, m, ts, tp, ts / tp);
  }
  return 0;
}
