#include "spim/kernels.hpp"

namespace spim::kernels::scalar {

KeyRange scan_key_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) noexcept {
  KeyRange r{keys.size(), 0};
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] >= lo && keys[i] <= hi) {
      if (r.count == 0) r.first = i;
      ++r.count;
    }
  }
  return r;
}

double sum(std::span<const double> xs) noexcept {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

double sum_squared_deviation(std::span<const double> xs, double mean) noexcept {
  double s = 0.0;
  for (double x : xs) {
    double d = x - mean;
    s += d * d;
  }
  return s;
}

}  // namespace spim::kernels::scalar
