#include "spim/cost.hpp"

namespace spim {

std::string_view to_string(CostEvent e) noexcept {
  switch (e) {
    case CostEvent::client_cache_scan: return "client_cache_scan";
    case CostEvent::client_store_scan: return "client_store_scan";
    case CostEvent::server_cache_scan: return "server_cache_scan";
    case CostEvent::server_store_scan: return "server_store_scan";
    case CostEvent::round_trip: return "round_trip";
  }
  return "unknown";
}

void CostMeter::charge_scan(CostEvent event, std::uint64_t scanned) {
  if (!model_.enabled) return;
  double units = static_cast<double>(scanned) * model_.scan_cost;
  std::lock_guard lock(mu_);
  log_.push_back({event, scanned, units});
  total_ += units;
}

void CostMeter::charge_round_trip() {
  if (!model_.enabled) return;
  std::lock_guard lock(mu_);
  log_.push_back({CostEvent::round_trip, 1, model_.rtt_cost});
  total_ += model_.rtt_cost;
}

double CostMeter::total() const {
  std::lock_guard lock(mu_);
  return total_;
}

double CostMeter::total_from_log() const {
  std::lock_guard lock(mu_);
  double sum = 0.0;
  for (const auto& e : log_) sum += e.units;
  return sum;
}

std::vector<CostEntry> CostMeter::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void CostMeter::reset() {
  std::lock_guard lock(mu_);
  log_.clear();
  total_ = 0.0;
}

}  // namespace spim
