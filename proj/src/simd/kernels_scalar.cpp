// Reference kernels. The four-lane accumulation is the canonical order the
// vector variants reproduce.

#include "divrec/simd/vec_ops.hpp"

namespace divrec::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double p = a[i] * b[i];
    lane[i % 4] += p;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    const double p = d * d;
    lane[i % 4] += p;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double p = alpha * x[i];
    y[i] += p;
  }
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const Kernels& scalar_kernels() {
  static constexpr Kernels k{&dot_scalar, &squared_distance_scalar, &axpy_scalar,
                             &scale_scalar};
  return k;
}

}  // namespace divrec::simd::detail
