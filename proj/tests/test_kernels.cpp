#include <doctest.h>

#include <array>
#include <vector>

#include "gradsurge/kernels.hpp"
#include "gradsurge/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using gradsurge::Rng;
namespace k = gradsurge::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("kernels match serial reference") {
  Rng rng(11);
  for (std::size_t n : {1ul, 7ul, 4096ul, 4097ul, 100000ul}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);
    CHECK(k::dot(x, y) == doctest::Approx(k::serial::dot(x, y)).epsilon(1e-12));
    CHECK(k::sum(x) == doctest::Approx(k::serial::sum(x)).epsilon(1e-12));
    CHECK(k::sumsq(x) == doctest::Approx(k::serial::sumsq(x)).epsilon(1e-12));

    auto y1 = y, y2 = y;
    k::axpy(0.37, x, y1);
    k::serial::axpy(0.37, x, y2);
    CHECK(y1 == y2);
  }
}

TEST_CASE("matmul agrees with the reference bitwise") {
  Rng rng(12);
  const std::vector<std::array<int, 3>> shapes{{1, 1, 1}, {3, 4, 2}, {17, 9, 13}, {64, 64, 64}};
  for (auto [m, kk, n] : shapes) {
    auto a = random_vec(static_cast<std::size_t>(m) * kk, rng);
    auto b = random_vec(static_cast<std::size_t>(kk) * n, rng);
    std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
    k::matmul(a.data(), b.data(), c1.data(), m, kk, n);
    k::serial::matmul(a.data(), b.data(), c2.data(), m, kk, n);
    CHECK(c1 == c2);
  }
}

TEST_CASE("transposed matmuls agree with explicit transposition") {
  Rng rng(13);
  const int m = 5, kk = 7, n = 3;
  auto a = random_vec(m * kk, rng);
  auto bt = random_vec(n * kk, rng);  // B^T stored [n, kk]
  std::vector<double> b(kk * n);
  for (int i = 0; i < kk; ++i)
    for (int j = 0; j < n; ++j) b[i * n + j] = bt[j * kk + i];
  std::vector<double> c1(m * n), c2(m * n);
  k::matmul_nt(a.data(), bt.data(), c1.data(), m, kk, n);
  k::serial::matmul(a.data(), b.data(), c2.data(), m, kk, n);
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-13));

  auto at = random_vec(kk * m, rng);  // A^T stored [kk, m]
  std::vector<double> a2(m * kk);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < kk; ++j) a2[i * kk + j] = at[j * m + i];
  auto b2 = random_vec(kk * n, rng);
  k::matmul_tn(at.data(), b2.data(), c1.data(), m, kk, n);
  k::serial::matmul(a2.data(), b2.data(), c2.data(), m, kk, n);
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-13));
}

TEST_CASE("reductions are bit-identical across thread counts") {
  Rng rng(14);
  auto x = random_vec(1 << 17, rng);
  auto y = random_vec(1 << 17, rng);

#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double d1 = k::dot(x, y);
  const double s1 = k::sumsq(x);
  omp_set_num_threads(4);
  const double d4 = k::dot(x, y);
  const double s4 = k::sumsq(x);
  omp_set_num_threads(saved);
  CHECK(d1 == d4);
  CHECK(s1 == s4);
#else
  CHECK(k::dot(x, y) == k::dot(x, y));
#endif
}
