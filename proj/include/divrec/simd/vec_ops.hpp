#pragma once

// Dense double-precision vector kernels with runtime ISA selection.
//
// Every variant reduces in the same order: four interleaved partial sums
// (element i feeds lane i % 4) combined as (s0 + s2) + (s1 + s3), with no
// fused multiply-add. Scalar, AVX2 and NEON therefore return bit-identical
// results, which keeps rankings and simulator output independent of the host.

#include <cstddef>
#include <span>
#include <string_view>

namespace divrec::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

/// Parses "scalar", "avx2" or "neon"; throws std::invalid_argument otherwise.
Isa parse_isa(std::string_view name);

bool isa_supported(Isa isa);

/// Best variant the running CPU supports.
Isa detected_isa();

/// Variant used by the dispatching functions below. Defaults to
/// detected_isa(), or to $DIVREC_ISA when that names a supported variant.
Isa active_isa();

/// Throws std::invalid_argument if the CPU cannot run `isa`.
void set_active_isa(Isa isa);

struct Kernels {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
};

const Kernels& kernels_for(Isa isa);

// Dispatching entry points. Length mismatches throw std::invalid_argument.
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);

namespace detail {
const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif
#if defined(__aarch64__)
const Kernels& neon_kernels();
#endif
}  // namespace detail

}  // namespace divrec::simd
