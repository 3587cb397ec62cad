#pragma once

// Server tier: the Server Controller (SC) gates every request and is the only
// holder of the Server Model (SM), which alone reads the Data Store.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "spim/config.hpp"
#include "spim/cost.hpp"
#include "spim/storage.hpp"
#include "spim/wire.hpp"

namespace spim {

enum class Mode { spim, dmvc };

std::string_view to_string(Mode m) noexcept;
/// Throws Errc::config_error.
Mode parse_mode(std::string_view text);

/// Static shared-secret gate.
class AccessPolicy {
 public:
  static AccessPolicy open() { return AccessPolicy(false, {}); }
  static AccessPolicy tokens(std::unordered_set<std::string> accepted);

  bool allows(std::string_view token) const noexcept;
  bool enabled() const noexcept { return enabled_; }

 private:
  AccessPolicy(bool enabled, std::unordered_set<std::string> accepted)
      : enabled_(enabled), accepted_(std::move(accepted)) {}

  bool enabled_;
  std::unordered_set<std::string> accepted_;
};

struct TierCounters {
  std::uint64_t sc_requests = 0;
  std::uint64_t sm_invocations = 0;
  std::uint64_t ds_scans = 0;
  std::uint64_t dc_reads_attempted_by_sm = 0;  // stays 0 in SPIM mode
  std::uint64_t replica_writes = 0;            // dmvc server-side cache syncs

  friend bool operator==(const TierCounters&, const TierCounters&) = default;
};

/// key=value lines, one counter per line.
std::string format_counters(const TierCounters& c);

class ServerController {
 public:
  ServerController(std::shared_ptr<const DataStore> store, AccessPolicy policy, Mode mode = Mode::spim,
                   CostMeter* meter = nullptr, std::size_t replica_capacity = DataCache::kDefaultCapacity);
  ~ServerController();
  ServerController(const ServerController&) = delete;
  ServerController& operator=(const ServerController&) = delete;

  /// Always answers; never throws for request-level failures. The response
  /// echoes req.request_id.
  ResponseEnvelope handle(const RequestEnvelope& req);

  /// Response for a frame whose payload did not decode.
  ResponseEnvelope reject_malformed();

  TierCounters counters() const;
  Mode mode() const noexcept { return mode_; }

 private:
  class ServerModel;

  AccessPolicy policy_;
  Mode mode_;
  std::unique_ptr<ServerModel> model_;
  std::atomic<std::uint64_t> sc_requests_{0};
};

struct ServerConfig {
  std::string listen = "127.0.0.1:7878";
  AccessPolicy access = AccessPolicy::open();
  std::vector<std::filesystem::path> store_paths;
  Mode mode = Mode::spim;
  bool instrumentation = false;
  std::filesystem::path stats_path = "spim-server.stats";
  std::size_t replica_capacity = DataCache::kDefaultCapacity;

  /// Keys: listen, auth, tokens, store, mode, instrumentation, stats, capacity.
  static ServerConfig from(const KeyValueConfig& kv);
};

/// Running TCP server. Each connection is served on its own thread, frames
/// processed in order; pipelined requests are allowed.
class Server {
 public:
  /// Loads the configured store files, binds and starts accepting.
  static std::unique_ptr<Server> start(const ServerConfig& config);
  static std::unique_ptr<Server> start(const ServerConfig& config, std::shared_ptr<const DataStore> store,
                                       CostMeter* meter = nullptr);

  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const noexcept;
  std::string address() const;
  TierCounters counters() const;
  ServerController& controller() noexcept;

  /// Stops accepting, lets each connection finish the frames it already
  /// received, then joins. Idempotent.
  void stop();

 private:
  struct Impl;
  explicit Server(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace spim
