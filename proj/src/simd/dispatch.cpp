#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "divrec/simd/vec_ops.hpp"

namespace divrec::simd {
namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("DIVREC_ISA")) {
    try {
      const Isa wanted = parse_isa(env);
      if (isa_supported(wanted)) return wanted;
    } catch (const std::invalid_argument&) {
    }
  }
  return detected_isa();
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("vector length mismatch: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "neon") return Isa::kNeon;
  throw std::invalid_argument("unknown ISA '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() {
  if (isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  if (isa_supported(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("ISA '" + std::string(isa_name(isa)) +
                                "' is not supported on this CPU");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

const Kernels& kernels_for(Isa isa) {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::kAvx2: return detail::avx2_kernels();
#endif
#if defined(__aarch64__)
    case Isa::kNeon: return detail::neon_kernels();
#endif
    default: return detail::scalar_kernels();
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size());
  return kernels_for(active_isa()).dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size());
  return kernels_for(active_isa()).squared_distance(a.data(), b.data(), a.size());
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_lengths(x.size(), y.size());
  kernels_for(active_isa()).axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
  kernels_for(active_isa()).scale(alpha, x.data(), x.size());
}

}  // namespace divrec::simd
