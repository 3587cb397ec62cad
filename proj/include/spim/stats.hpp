#pragma once

#include <optional>
#include <span>

namespace spim::stats {

double mean(std::span<const double> xs);

/// Sample standard deviation, sqrt(Σ(x - x̄)² / (n - 1)). Requires n ≥ 2;
/// returns nullopt otherwise.
std::optional<double> sigma(std::span<const double> xs);

/// (t1 - t2) / t1 × 100, signed. nullopt when t1 ≤ 0 (a blank cell).
std::optional<double> decrease_pct(double t1, double t2);

/// Rounds half away from zero to `digits` decimals (2 in every report).
double round_half_up(double value, int digits = 2);

}  // namespace spim::stats
