#pragma once

// Baseline for comparison: model and controller duplicated on both tiers,
// with synchronous model synchronization. A miss performs the redundant
// lookups the duplicated design implies: CM also scans the store, SM also
// scans its cache replica.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "spim/client.hpp"

namespace spim {

struct DmvcCounters {
  std::uint64_t cm_cache_scans = 0;
  std::uint64_t cm_ds_scans = 0;
  std::uint64_t sm_cache_scans = 0;
  std::uint64_t sm_ds_scans = 0;
  std::uint64_t sync_messages = 0;

  friend bool operator==(const DmvcCounters&, const DmvcCounters&) = default;
  friend DmvcCounters operator-(const DmvcCounters& a, const DmvcCounters& b);
};

std::string format_counters(const DmvcCounters& c);

/// The client-side model's direct access to the data store, which the
/// duplicated design grants and SPIM withholds.
class StoreView {
 public:
  virtual ~StoreView() = default;
  /// Scans for `q` and returns the number of records scanned. An empty match
  /// is not an error here; the server's answer is what the caller returns.
  virtual std::uint64_t scan(const Query& q) = 0;
};

/// Scans a store held in this process (deterministic cost runs, tests).
class LocalStoreView final : public StoreView {
 public:
  explicit LocalStoreView(std::shared_ptr<const DataStore> store);
  std::uint64_t scan(const Query& q) override;

 private:
  std::shared_ptr<const DataStore> store_;
};

/// Scans a store published by another server over the wire, so the
/// redundant lookup pays real network and codec costs.
class RemoteStoreView final : public StoreView {
 public:
  RemoteStoreView(std::unique_ptr<Transport> transport, std::string client_id, std::string token);
  std::uint64_t scan(const Query& q) override;

 private:
  std::unique_ptr<Transport> transport_;
  std::string client_id_;
  std::string token_;
  std::uint64_t sequence_ = 0;
};

struct DmvcTransaction {
  ResponseEnvelope response;
  std::string document;
  DmvcCounters delta;
};

class DmvcController {
 public:
  /// `replica_view` is the client-side model's view of the data store. The
  /// server behind `transport` must run in dmvc mode for the SM half.
  DmvcController(ClientOptions options, std::unique_ptr<Transport> transport,
                 std::unique_ptr<StoreView> replica_view, CostMeter* meter = nullptr);
  DmvcController(ClientOptions options, std::unique_ptr<Transport> transport,
                 std::shared_ptr<const DataStore> replica_view, CostMeter* meter = nullptr)
      : DmvcController(std::move(options), std::move(transport),
                       std::make_unique<LocalStoreView>(std::move(replica_view)), meter) {}

  /// dmvc_request. Server-side counter fields of the delta are filled only
  /// when the transport can observe the server.
  DmvcTransaction request(const Query& q);

  /// Client half of model synchronization; the server half happens inside
  /// SM before it replies.
  void sync_models(const Query& q, const ResponseEnvelope& result);

  DmvcCounters counters() const;
  std::vector<std::string> cached_keys() const { return model_.cached_keys(); }

 private:
  ClientOptions options_;
  std::unique_ptr<Transport> transport_;
  std::unique_ptr<StoreView> replica_view_;
  CostMeter* meter_;
  ClientModel model_;
  std::mutex mu_;
  std::uint64_t sequence_ = 0;
  std::atomic<std::uint64_t> cm_ds_scans_{0};
  std::atomic<std::uint64_t> sync_messages_{0};
};

}  // namespace spim
