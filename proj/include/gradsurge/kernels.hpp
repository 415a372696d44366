#pragma once

#include <cstddef>
#include <span>

// Dense vector/matrix kernels. The parallel versions are the production
// path; reductions are computed over fixed-size blocks whose partials are
// combined in index order, so every result is bit-identical regardless of
// the number of OpenMP threads (or whether OpenMP is enabled at all).
// kernels::serial holds the naive reference implementations used by the
// tests and the benchmark target.

namespace gradsurge::kernels {

// Reduction block size. Fixed: changing it changes rounding.
inline constexpr std::size_t kBlock = 4096;

// Minimum element count before a loop goes parallel.
inline constexpr std::size_t kParGrain = 32768;

double dot(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double sumsq(std::span<const double> x);
double nrm2(std::span<const double> x);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
// x *= a
void scal(double a, std::span<double> x);
// out = x + y
void add(std::span<const double> x, std::span<const double> y, std::span<double> out);
// out = x * y (elementwise)
void mul(std::span<const double> x, std::span<const double> y, std::span<double> out);

// C[m x n] = A[m x k] * B[k x n], row-major, C overwritten
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
// C[m x n] = A[m x k] * B[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
// C[m x n] = A[k x m]^T * B[k x n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);

namespace serial {

double dot(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double sumsq(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

}  // namespace serial

}  // namespace gradsurge::kernels
