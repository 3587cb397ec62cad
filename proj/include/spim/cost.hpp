#pragma once

// Deterministic cost accounting. Components charge abstract units to a meter
// as they work; the meter keeps an event log so totals can be cross-checked.

#include <cstdint>
#include <mutex>
#include <string_view>
#include <vector>

namespace spim {

struct CostModel {
  double scan_cost = 1.0;  // per record (DS) or per entry (DC) scanned
  double rtt_cost = 0.0;   // per client<->server round trip
  bool enabled = false;    // a disabled meter ignores every charge
};

enum class CostEvent { client_cache_scan, client_store_scan, server_cache_scan, server_store_scan, round_trip };

std::string_view to_string(CostEvent e) noexcept;

struct CostEntry {
  CostEvent event;
  std::uint64_t quantity;  // items scanned, or 1 for a round trip
  double units;
};

class CostMeter {
 public:
  explicit CostMeter(CostModel model) : model_(model) {}

  void charge_scan(CostEvent event, std::uint64_t scanned);
  void charge_round_trip();

  /// Running total, accumulated as events arrive.
  double total() const;
  /// Recomputed from the event log; equals total() unless bookkeeping broke.
  double total_from_log() const;
  std::vector<CostEntry> log() const;
  void reset();

  const CostModel& model() const noexcept { return model_; }

 private:
  CostModel model_;
  mutable std::mutex mu_;
  std::vector<CostEntry> log_;
  double total_ = 0.0;
};

}  // namespace spim
