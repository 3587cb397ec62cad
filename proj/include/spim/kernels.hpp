#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and
// vectorized variants; the public entry points dispatch at runtime to the
// best variant the CPU supports. All variants must agree with the scalar
// reference (exactly for integer kernels, to rounding for floating point).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace spim::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

/// Whether this build and this CPU can run `isa`.
bool isa_available(Isa isa) noexcept;

/// Variant used by the dispatching entry points. Honors SPIM_SIMD=scalar in
/// the environment.
Isa active_isa() noexcept;

/// Pins dispatch to one variant (tests, benchmarks); nullopt restores the
/// automatic choice. Requesting an unavailable ISA falls back to scalar.
void force_isa(std::optional<Isa> isa) noexcept;

/// Result of a full linear pass over a key column: index of the first key in
/// [lo, hi] (== keys.size() when none) and the number of keys in range.
struct KeyRange {
  std::size_t first = 0;
  std::size_t count = 0;

  friend bool operator==(const KeyRange&, const KeyRange&) = default;
};

KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept;
double sum(std::span<const double> xs) noexcept;
/// Σ (x - mean)².
double sum_squared_deviation(std::span<const double> xs, double mean) noexcept;

namespace scalar {
KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept;
double sum(std::span<const double> xs) noexcept;
double sum_squared_deviation(std::span<const double> xs, double mean) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define SPIM_HAVE_AVX2_KERNELS 1
namespace avx2 {
KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept;
double sum(std::span<const double> xs) noexcept;
double sum_squared_deviation(std::span<const double> xs, double mean) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define SPIM_HAVE_NEON_KERNELS 1
namespace neon {
KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept;
double sum(std::span<const double> xs) noexcept;
double sum_squared_deviation(std::span<const double> xs, double mean) noexcept;
}  // namespace neon
#endif

}  // namespace spim::kernels
