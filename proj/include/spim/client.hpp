#pragma once

// Client tier: the Client Controller (CC) is the only entry point for views;
// it owns the Client Model (CM), which alone touches the Data Cache. Every
// transaction records which of the fifteen request-response steps it took.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spim/config.hpp"
#include "spim/cost.hpp"
#include "spim/net.hpp"
#include "spim/server.hpp"
#include "spim/storage.hpp"
#include "spim/wire.hpp"

namespace spim {

enum class Step { s01, s02, s03, s04, s05, s06, s07, s08, s09, s10, s11, s12, s13, s14, s15, fail };

std::string_view to_string(Step s) noexcept;

enum class Outcome { hit, miss_served, failed };

std::string_view to_string(Outcome o) noexcept;

struct StepTrace {
  std::string transaction_id;
  std::vector<Step> steps;
  Outcome outcome = Outcome::failed;

  /// S01..S07.
  static const std::vector<Step>& hit_sequence();
  /// S01..S04, S08..S15.
  static const std::vector<Step>& miss_sequence();

  /// True when a HIT/MISS_SERVED trace matches its canonical sequence.
  bool canonical() const;
};

// ---------------------------------------------------------------------------
// Transport

class Transport {
 public:
  virtual ~Transport() = default;

  /// One request, one response. Throws Errc::connection_failed,
  /// Errc::truncated or Errc::malformed.
  virtual ResponseEnvelope roundtrip(const RequestEnvelope& req) = 0;

  /// Server-side counters, when the transport can observe the server.
  virtual std::optional<TierCounters> server_counters() const { return std::nullopt; }
};

/// Calls a ServerController directly, but still passes both documents through
/// the XML codec and framing so the wire path is exercised.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(ServerController& server, CostMeter* meter = nullptr)
      : server_(server), meter_(meter) {}

  ResponseEnvelope roundtrip(const RequestEnvelope& req) override;
  std::optional<TierCounters> server_counters() const override { return server_.counters(); }

 private:
  ServerController& server_;
  CostMeter* meter_;
};

/// Framed XML over TCP; the connection is opened lazily and reused.
class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(net::HostPort address, CostMeter* meter = nullptr,
                        std::size_t max_frame = kDefaultMaxFrame)
      : address_(std::move(address)), meter_(meter), max_frame_(max_frame) {}

  ResponseEnvelope roundtrip(const RequestEnvelope& req) override;

  std::uint64_t connections_opened() const noexcept { return connections_opened_; }

 private:
  net::HostPort address_;
  CostMeter* meter_;
  std::size_t max_frame_;
  net::Socket socket_;
  std::uint64_t connections_opened_ = 0;
};

// ---------------------------------------------------------------------------
// Client Model

struct ClientModelCounters {
  std::uint64_t cache_scans = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t stores = 0;
  std::uint64_t ds_reads_attempted = 0;  // CM has no store path in SPIM; stays 0
};

/// Sole owner of the Data Cache. All operations are serialized.
class ClientModel {
 public:
  explicit ClientModel(std::size_t capacity = DataCache::kDefaultCapacity, CostMeter* meter = nullptr);

  /// cm_lookup: nullopt is CACHE_MISS.
  std::optional<ResponseEnvelope> lookup(const Query& q);
  /// cm_store.
  void store(const Query& q, ResponseEnvelope payload);
  /// cm_to_xml.
  std::string to_xml(const ResponseEnvelope& resp) const;

  ClientModelCounters counters() const;
  std::vector<std::string> cached_keys() const;
  DataCache snapshot() const;
  void replace_cache(DataCache cache);

 private:
  mutable std::mutex mu_;
  DataCache cache_;
  CostMeter* meter_;
  ClientModelCounters counters_;
};

/// Exclusive advisory lock on `<cache path>.lock` for as long as it lives.
class CacheFileLock {
 public:
  /// Throws Errc::lock_held if another handle owns the cache file.
  explicit CacheFileLock(const std::filesystem::path& cache_path);
  ~CacheFileLock();
  CacheFileLock(const CacheFileLock&) = delete;
  CacheFileLock& operator=(const CacheFileLock&) = delete;

 private:
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Client Controller

struct ClientOptions {
  std::string client_id = "client";
  std::string token;
  std::size_t cache_capacity = DataCache::kDefaultCapacity;
};

struct Transaction {
  ResponseEnvelope response;
  std::string document;  // XML handed to the view; empty on failure
  StepTrace trace;
};

struct ClientCounters {
  std::uint64_t transactions = 0;
  ClientModelCounters model;
};

class ClientController {
 public:
  ClientController(ClientOptions options, std::unique_ptr<Transport> transport, CostMeter* meter = nullptr);
  ~ClientController();

  /// cc_request. Server-reported failures come back as ERROR responses with a
  /// FAILED trace and leave the cache untouched; transport failures throw.
  Transaction request(const Query& q);

  /// Takes the advisory lock on `path` and loads it into the cache.
  void attach_cache_file(const std::filesystem::path& path);
  /// Writes the cache to the attached file (no-op when none is attached).
  void persist_cache() const;

  ClientCounters counters() const;
  std::vector<std::string> cached_keys() const;
  const ClientOptions& options() const noexcept { return options_; }

 private:
  std::string next_request_id();

  ClientOptions options_;
  std::unique_ptr<Transport> transport_;
  ClientModel model_;
  std::mutex mu_;
  std::uint64_t sequence_ = 0;
  std::atomic<std::uint64_t> transactions_{0};
  std::optional<std::filesystem::path> cache_path_;
  std::unique_ptr<CacheFileLock> cache_lock_;
};

/// Client configuration file. Keys: server, client_id, token, cache, capacity,
/// mode, store or store_server (dmvc store view), stats, cost_model,
/// scan_cost, rtt_cost.
struct ClientConfig {
  std::string server_address = "127.0.0.1:7878";
  ClientOptions options;
  std::optional<std::filesystem::path> cache_path;
  Mode mode = Mode::spim;
  std::vector<std::filesystem::path> replica_store_paths;
  std::optional<std::string> replica_store_server;
  std::optional<std::filesystem::path> stats_path;
  std::optional<CostModel> cost_model;

  static ClientConfig from(const KeyValueConfig& kv);
};

}  // namespace spim
