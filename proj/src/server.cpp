#include "spim/server.hpp"

#include <openssl/crypto.h>

#include <fstream>
#include <iostream>
#include <list>
#include <mutex>
#include <optional>
#include <thread>

#include "spim/error.hpp"
#include "spim/net.hpp"

namespace spim {

std::string_view to_string(Mode m) noexcept { return m == Mode::spim ? "spim" : "dmvc"; }

Mode parse_mode(std::string_view text) {
  if (text == "spim") return Mode::spim;
  if (text == "dmvc") return Mode::dmvc;
  throw Error(Errc::config_error, "mode must be spim or dmvc, got '" + std::string(text) + "'");
}

AccessPolicy AccessPolicy::tokens(std::unordered_set<std::string> accepted) {
  if (accepted.empty()) throw Error(Errc::config_error, "auth enabled but no accepted tokens");
  return AccessPolicy(true, std::move(accepted));
}

bool AccessPolicy::allows(std::string_view token) const noexcept {
  if (!enabled_) return true;
  bool match = false;
  // Compare against every token so timing does not reveal which one is close.
  for (const auto& t : accepted_) {
    if (t.size() == token.size() && CRYPTO_memcmp(t.data(), token.data(), t.size()) == 0) match = true;
  }
  return match;
}

std::string format_counters(const TierCounters& c) {
  std::string out;
  out += "sc_requests=" + std::to_string(c.sc_requests) + "\n";
  out += "sm_invocations=" + std::to_string(c.sm_invocations) + "\n";
  out += "ds_scans=" + std::to_string(c.ds_scans) + "\n";
  out += "dc_reads_attempted_by_sm=" + std::to_string(c.dc_reads_attempted_by_sm) + "\n";
  out += "replica_writes=" + std::to_string(c.replica_writes) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Server Model

class ServerController::ServerModel {
 public:
  struct Fetched {
    std::vector<Record> records;
    Source source;
  };

  ServerModel(std::shared_ptr<const DataStore> store, Mode mode, CostMeter* meter, std::size_t replica_capacity)
      : store_(std::move(store)), mode_(mode), meter_(meter) {
    if (mode_ == Mode::dmvc) replica_.emplace(replica_capacity);
  }

  /// Throws Errc::not_found.
  Fetched fetch(const Query& q) {
    ++invocations_;
    if (replica_) {
      // Duplicated model: SM consults its own cache replica before the store.
      std::lock_guard lock(replica_mu_);
      ++cache_reads_;
      CacheLookup hit = replica_->lookup(q);
      if (meter_ != nullptr) meter_->charge_scan(CostEvent::server_cache_scan, hit.entries_scanned);
      if (hit.hit()) return Fetched{std::move(hit.payload->records), Source::cache};
    }
    ++ds_scans_;
    ScanResult scan = ds_scan(*store_, q);
    if (meter_ != nullptr) meter_->charge_scan(CostEvent::server_store_scan, scan.records_scanned);
    if (replica_) {
      std::lock_guard lock(replica_mu_);
      replica_->store(q, ResponseEnvelope::success("sync", Source::store, scan.records));
      ++replica_writes_;
    }
    return Fetched{std::move(scan.records), Source::store};
  }

  void fill(TierCounters& c) const {
    c.sm_invocations = invocations_.load();
    c.ds_scans = ds_scans_.load();
    c.dc_reads_attempted_by_sm = cache_reads_.load();
    c.replica_writes = replica_writes_.load();
  }

 private:
  std::shared_ptr<const DataStore> store_;
  Mode mode_;
  CostMeter* meter_;
  std::mutex replica_mu_;
  std::optional<DataCache> replica_;  // dmvc only; SPIM's SM has no cache path
  std::atomic<std::uint64_t> invocations_{0};
  std::atomic<std::uint64_t> ds_scans_{0};
  std::atomic<std::uint64_t> cache_reads_{0};
  std::atomic<std::uint64_t> replica_writes_{0};
};

// ---------------------------------------------------------------------------
// Server Controller

ServerController::ServerController(std::shared_ptr<const DataStore> store, AccessPolicy policy, Mode mode,
                                   CostMeter* meter, std::size_t replica_capacity)
    : policy_(std::move(policy)),
      mode_(mode),
      model_(std::make_unique<ServerModel>(std::move(store), mode, meter, replica_capacity)) {}

ServerController::~ServerController() = default;

ResponseEnvelope ServerController::handle(const RequestEnvelope& req) {
  ++sc_requests_;
  if (!policy_.allows(req.token)) return ResponseEnvelope::failure(req.request_id, ErrorCode::unauthorized);
  if (!req.query.valid()) return ResponseEnvelope::failure(req.request_id, ErrorCode::malformed);
  try {
    auto fetched = model_->fetch(req.query);
    return ResponseEnvelope::success(req.request_id, fetched.source, std::move(fetched.records));
  } catch (const Error& e) {
    if (e.code() == Errc::not_found) return ResponseEnvelope::failure(req.request_id, ErrorCode::not_found);
    throw;
  }
}

ResponseEnvelope ServerController::reject_malformed() {
  ++sc_requests_;
  return ResponseEnvelope::failure("", ErrorCode::malformed);
}

TierCounters ServerController::counters() const {
  TierCounters c;
  c.sc_requests = sc_requests_.load();
  model_->fill(c);
  return c;
}

// ---------------------------------------------------------------------------
// Configuration

ServerConfig ServerConfig::from(const KeyValueConfig& kv) {
  kv.require_known({"listen", "auth", "tokens", "store", "mode", "instrumentation", "stats", "capacity"});
  ServerConfig cfg;
  cfg.listen = kv.get_or("listen", cfg.listen);
  net::parse_host_port(cfg.listen);
  auto tokens = split_list(kv.get_or("tokens", ""));
  bool auth = kv.get_bool("auth", true);
  if (auth) {
    cfg.access = AccessPolicy::tokens(std::unordered_set<std::string>(tokens.begin(), tokens.end()));
  }
  for (const auto& s : kv.get_all("store")) {
    for (const auto& p : split_list(s)) cfg.store_paths.push_back(kv.resolve(p));
  }
  if (cfg.store_paths.empty()) throw Error(Errc::config_error, "server config needs store=<csv path>");
  cfg.mode = parse_mode(kv.get_or("mode", "spim"));
  cfg.instrumentation = kv.get_bool("instrumentation", false);
  cfg.stats_path = kv.resolve(kv.get_or("stats", cfg.stats_path.string()));
  cfg.replica_capacity = kv.get_uint("capacity", cfg.replica_capacity);
  if (cfg.replica_capacity == 0) throw Error(Errc::config_error, "capacity must be at least 1");
  return cfg;
}

// ---------------------------------------------------------------------------
// TCP server

namespace {

constexpr auto kPollInterval = std::chrono::milliseconds(50);

}  // namespace

struct Server::Impl {
  struct Connection {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  ServerConfig config;
  std::unique_ptr<ServerController> controller;
  net::Socket listener;
  std::uint16_t port = 0;
  std::atomic<bool> stopping{false};
  std::thread acceptor;
  std::mutex connections_mu;
  std::list<Connection> connections;
  std::mutex stats_mu;

  void accept_loop() {
    while (!stopping.load()) {
      net::Socket client;
      try {
        client = net::accept_for(listener, kPollInterval);
      } catch (const Error& e) {
        std::cerr << "spim: accept failed: " << e.what() << "\n";
        continue;
      }
      reap();
      if (!client.valid()) continue;
      auto done = std::make_shared<std::atomic<bool>>(false);
      std::lock_guard lock(connections_mu);
      connections.push_back(Connection{
          std::thread([this, sock = std::move(client), done]() mutable {
            serve_connection(std::move(sock));
            done->store(true);
          }),
          done});
    }
  }

  void reap() {
    std::lock_guard lock(connections_mu);
    for (auto it = connections.begin(); it != connections.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::string respond(const std::string& payload) {
    ResponseEnvelope resp;
    try {
      resp = controller->handle(decode_request(payload));
    } catch (const Error&) {
      resp = controller->reject_malformed();
    }
    if (config.instrumentation) write_stats();
    return frame(encode_response(resp));
  }

  void serve_connection(net::Socket sock) {
    StreamDeframer deframer;
    std::string buf(64 * 1024, '\0');
    try {
      for (;;) {
        try {
          while (auto payload = deframer.next()) sock.send_all(respond(*payload));
        } catch (const Error& e) {
          if (e.code() != Errc::oversize) throw;
          // The stream cannot be resynchronized after a bogus length.
          sock.send_all(frame(encode_response(controller->reject_malformed())));
          return;
        }
        if (stopping.load()) return;
        if (!sock.wait_readable(kPollInterval)) continue;
        std::size_t n = sock.recv_some(buf.data(), buf.size());
        if (n == 0) return;
        deframer.feed(std::string_view(buf.data(), n));
      }
    } catch (const Error&) {
      // Peer went away mid-write; nothing to answer.
    }
  }

  void write_stats() {
    std::lock_guard lock(stats_mu);
    auto tmp = config.stats_path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << "mode=" << to_string(config.mode) << "\n" << format_counters(controller->counters());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, config.stats_path, ec);
  }
};

Server::Server(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

std::unique_ptr<Server> Server::start(const ServerConfig& config) {
  auto store = std::make_shared<DataStore>();
  for (const auto& path : config.store_paths) store->load_csv_file(path);
  return start(config, std::move(store));
}

std::unique_ptr<Server> Server::start(const ServerConfig& config, std::shared_ptr<const DataStore> store,
                                      CostMeter* meter) {
  auto impl = std::make_unique<Impl>();
  impl->config = config;
  impl->controller =
      std::make_unique<ServerController>(std::move(store), config.access, config.mode, meter, config.replica_capacity);
  impl->listener = net::listen_tcp(net::parse_host_port(config.listen));
  impl->port = impl->listener.local_port();
  Impl* raw = impl.get();
  impl->acceptor = std::thread([raw] { raw->accept_loop(); });
  return std::unique_ptr<Server>(new Server(std::move(impl)));
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const noexcept { return impl_->port; }

std::string Server::address() const {
  return net::parse_host_port(impl_->config.listen).host + ":" + std::to_string(impl_->port);
}

TierCounters Server::counters() const { return impl_->controller->counters(); }

ServerController& Server::controller() noexcept { return *impl_->controller; }

void Server::stop() {
  if (impl_->stopping.exchange(true)) return;
  if (impl_->acceptor.joinable()) impl_->acceptor.join();
  std::lock_guard lock(impl_->connections_mu);
  for (auto& c : impl_->connections) c.thread.join();
  impl_->connections.clear();
  impl_->listener.close();
}

}  // namespace spim
