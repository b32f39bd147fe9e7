// AVX2 kernels. Compiled with -mavx2 only; FMA stays disabled so rounding
// matches the scalar reference.

#include <immintrin.h>

#include "divrec/simd/vec_ops.hpp"

namespace divrec::simd::detail {
namespace {

inline double finish(__m256d acc, const double* a, const double* b, std::size_t i,
                     std::size_t n, bool diff) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) {
    const double d = diff ? a[i] - b[i] : a[i];
    const double p = diff ? d * d : a[i] * b[i];
    lane[i % 4] += p;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  return finish(acc, a, b, i, n, false);
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  return finish(acc, a, b, i, n, true);
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
  }
  for (; i < n; ++i) {
    const double p = alpha * x[i];
    y[i] += p;
  }
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const Kernels& avx2_kernels() {
  static constexpr Kernels k{&dot_avx2, &squared_distance_avx2, &axpy_avx2, &scale_avx2};
  return k;
}

}  // namespace divrec::simd::detail
