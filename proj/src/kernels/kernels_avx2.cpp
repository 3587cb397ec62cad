#include "spim/kernels.hpp"

#if defined(SPIM_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#define SPIM_AVX2 __attribute__((target("avx2")))

namespace spim::kernels::avx2 {

namespace {

SPIM_AVX2 inline double horizontal_add(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

// x in [lo, hi]  <=>  (x - lo) <=u (hi - lo). AVX2 only has a signed 64-bit
// compare, so both sides are biased by the sign bit.
SPIM_AVX2 KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo,
                                  std::uint64_t hi) noexcept {
  KeyRange r{keys.size(), 0};
  if (lo > hi) return r;
  const std::size_t n = keys.size();
  const std::uint64_t* data = keys.data();
  const __m256i bias = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ull));
  const __m256i vlo = _mm256_set1_epi64x(static_cast<long long>(lo));
  const __m256i vwidth = _mm256_xor_si256(_mm256_set1_epi64x(static_cast<long long>(hi - lo)), bias);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    __m256i off = _mm256_xor_si256(_mm256_sub_epi64(x, vlo), bias);
    __m256i outside = _mm256_cmpgt_epi64(off, vwidth);
    unsigned inside = ~static_cast<unsigned>(_mm256_movemask_pd(_mm256_castsi256_pd(outside))) & 0xFu;
    if (inside != 0) {
      if (r.count == 0) r.first = i + static_cast<std::size_t>(__builtin_ctz(inside));
      r.count += static_cast<std::size_t>(__builtin_popcount(inside));
    }
  }
  for (; i < n; ++i) {
    if (data[i] - lo <= hi - lo) {
      if (r.count == 0) r.first = i;
      ++r.count;
    }
  }
  return r;
}

SPIM_AVX2 double sum(std::span<const double> xs) noexcept {
  const std::size_t n = xs.size();
  const double* data = xs.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(data + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(data + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(data + i));
  double s = horizontal_add(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += data[i];
  return s;
}

SPIM_AVX2 double sum_squared_deviation(std::span<const double> xs, double mean) noexcept {
  const std::size_t n = xs.size();
  const double* data = xs.data();
  const __m256d vmean = _mm256_set1_pd(mean);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(data + i), vmean);
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(data + i + 4), vmean);
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(data + i), vmean);
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d, d));
  }
  double s = horizontal_add(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    double d = data[i] - mean;
    s += d * d;
  }
  return s;
}

}  // namespace spim::kernels::avx2

#endif
