#include "spim/stats.hpp"

#include <cmath>

#include "spim/kernels.hpp"

namespace spim::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return kernels::sum(xs) / static_cast<double>(xs.size());
}

std::optional<double> sigma(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  double m = mean(xs);
  double ss = kernels::sum_squared_deviation(xs, m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::optional<double> decrease_pct(double t1, double t2) {
  if (!(t1 > 0.0)) return std::nullopt;
  return (t1 - t2) / t1 * 100.0;
}

double round_half_up(double value, int digits) {
  double scale = std::pow(10.0, digits);
  double scaled = value * scale;
  // Absorb representation error so that e.g. 1.005 (stored as 1.00499...) still
  // rounds up, as a decimal table would.
  double nudge = std::abs(scaled) * 1e-12;
  scaled = scaled >= 0 ? scaled + nudge : scaled - nudge;
  return std::round(scaled) / scale;
}

}  // namespace spim::stats
