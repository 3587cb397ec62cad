#include "spim/kernels.hpp"

#if defined(SPIM_HAVE_NEON_KERNELS)

#include <arm_neon.h>

namespace spim::kernels::neon {

KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept {
  KeyRange r{keys.size(), 0};
  if (lo > hi) return r;
  const std::size_t n = keys.size();
  const std::uint64_t* data = keys.data();
  const uint64x2_t vlo = vdupq_n_u64(lo);
  const uint64x2_t vwidth = vdupq_n_u64(hi - lo);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t inside = vcleq_u64(vsubq_u64(vld1q_u64(data + i), vlo), vwidth);
    bool in0 = vgetq_lane_u64(inside, 0) != 0;
    bool in1 = vgetq_lane_u64(inside, 1) != 0;
    if (r.count == 0 && (in0 || in1)) r.first = in0 ? i : i + 1;
    r.count += static_cast<std::size_t>(in0) + static_cast<std::size_t>(in1);
  }
  for (; i < n; ++i) {
    if (data[i] - lo <= hi - lo) {
      if (r.count == 0) r.first = i;
      ++r.count;
    }
  }
  return r;
}

double sum(std::span<const double> xs) noexcept {
  const std::size_t n = xs.size();
  const double* data = xs.data();
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vld1q_f64(data + i));
    acc1 = vaddq_f64(acc1, vld1q_f64(data + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += data[i];
  return s;
}

double sum_squared_deviation(std::span<const double> xs, double mean) noexcept {
  const std::size_t n = xs.size();
  const double* data = xs.data();
  const float64x2_t vmean = vdupq_n_f64(mean);
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t d0 = vsubq_f64(vld1q_f64(data + i), vmean);
    float64x2_t d1 = vsubq_f64(vld1q_f64(data + i + 2), vmean);
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    double d = data[i] - mean;
    s += d * d;
  }
  return s;
}

}  // namespace spim::kernels::neon

#endif
