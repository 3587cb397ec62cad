#include <atomic>
#include <cstdlib>
#include <cstring>

#include "spim/kernels.hpp"

namespace spim::kernels {

namespace {

Isa detect() noexcept {
  if (const char* env = std::getenv("SPIM_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::scalar;
  }
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SPIM_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(SPIM_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void force_isa(std::optional<Isa> isa) noexcept {
  Isa chosen = isa ? (isa_available(*isa) ? *isa : Isa::scalar) : detect();
  current().store(chosen, std::memory_order_relaxed);
}

KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept {
  switch (active_isa()) {
#if defined(SPIM_HAVE_AVX2_KERNELS)
    case Isa::avx2: return avx2::scan_key_range(keys, lo, hi);
#endif
#if defined(SPIM_HAVE_NEON_KERNELS)
    case Isa::neon: return neon::scan_key_range(keys, lo, hi);
#endif
    default: return scalar::scan_key_range(keys, lo, hi);
  }
}

double sum(std::span<const double> xs) noexcept {
  switch (active_isa()) {
#if defined(SPIM_HAVE_AVX2_KERNELS)
    case Isa::avx2: return avx2::sum(xs);
#endif
#if defined(SPIM_HAVE_NEON_KERNELS)
    case Isa::neon: return neon::sum(xs);
#endif
    default: return scalar::sum(xs);
  }
}

double sum_squared_deviation(std::span<const double> xs, double mean) noexcept {
  switch (active_isa()) {
#if defined(SPIM_HAVE_AVX2_KERNELS)
    case Isa::avx2: return avx2::sum_squared_deviation(xs, mean);
#endif
#if defined(SPIM_HAVE_NEON_KERNELS)
    case Isa::neon: return neon::sum_squared_deviation(xs, mean);
#endif
    default: return scalar::sum_squared_deviation(xs, mean);
  }
}

}  // namespace spim::kernels
