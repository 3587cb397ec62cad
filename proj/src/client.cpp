#include "spim/client.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "spim/error.hpp"

namespace spim {

std::string_view to_string(Step s) noexcept {
  static constexpr std::string_view kNames[] = {"S01", "S02", "S03", "S04", "S05", "S06", "S07", "S08",
                                                "S09", "S10", "S11", "S12", "S13", "S14", "S15", "FAIL"};
  return kNames[static_cast<std::size_t>(s)];
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::hit: return "HIT";
    case Outcome::miss_served: return "MISS_SERVED";
    case Outcome::failed: return "FAILED";
  }
  return "FAILED";
}

const std::vector<Step>& StepTrace::hit_sequence() {
  static const std::vector<Step> seq{Step::s01, Step::s02, Step::s03, Step::s04, Step::s05, Step::s06, Step::s07};
  return seq;
}

const std::vector<Step>& StepTrace::miss_sequence() {
  static const std::vector<Step> seq{Step::s01, Step::s02, Step::s03, Step::s04, Step::s08, Step::s09,
                                     Step::s10, Step::s11, Step::s12, Step::s13, Step::s14, Step::s15};
  return seq;
}

bool StepTrace::canonical() const {
  switch (outcome) {
    case Outcome::hit: return steps == hit_sequence();
    case Outcome::miss_served: return steps == miss_sequence();
    case Outcome::failed: return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Transports

ResponseEnvelope InProcessTransport::roundtrip(const RequestEnvelope& req) {
  std::string request_frame = frame(encode_request(req));
  ResponseEnvelope resp;
  try {
    resp = server_.handle(decode_request(deframe(request_frame).payload));
  } catch (const Error& e) {
    if (e.code() != Errc::malformed) throw;
    resp = server_.reject_malformed();
  }
  std::string response_frame = frame(encode_response(resp));
  if (meter_ != nullptr) meter_->charge_round_trip();
  return decode_response(deframe(response_frame).payload);
}

ResponseEnvelope TcpTransport::roundtrip(const RequestEnvelope& req) {
  const std::string out = frame(encode_request(req));
  for (int attempt = 0;; ++attempt) {
    bool reused = socket_.valid();
    if (!reused) {
      socket_ = net::connect_tcp(address_);
      ++connections_opened_;
    }
    StreamDeframer deframer(max_frame_);
    std::string buf(64 * 1024, '\0');
    try {
      socket_.send_all(out);
      for (;;) {
        if (auto payload = deframer.next()) {
          if (meter_ != nullptr) meter_->charge_round_trip();
          return decode_response(*payload);
        }
        std::size_t n = socket_.recv_some(buf.data(), buf.size());
        if (n == 0) {
          socket_.close();
          if (deframer.buffered() > 0) throw Error(Errc::truncated, "response frame cut mid-stream");
          // The server may have dropped an idle connection; retry once fresh.
          if (reused && attempt == 0) break;
          throw Error(Errc::connection_failed, "server closed the connection");
        }
        deframer.feed(std::string_view(buf.data(), n));
      }
    } catch (const Error& e) {
      socket_.close();
      if (e.code() == Errc::connection_failed && reused && attempt == 0 && deframer.buffered() == 0) continue;
      throw;
    }
  }
}

// ---------------------------------------------------------------------------
// Client Model

ClientModel::ClientModel(std::size_t capacity, CostMeter* meter) : cache_(capacity), meter_(meter) {}

std::optional<ResponseEnvelope> ClientModel::lookup(const Query& q) {
  std::lock_guard lock(mu_);
  ++counters_.cache_scans;
  CacheLookup result = cache_.lookup(q);
  if (meter_ != nullptr) meter_->charge_scan(CostEvent::client_cache_scan, result.entries_scanned);
  if (result.hit()) {
    ++counters_.hits;
  } else {
    ++counters_.misses;
  }
  return std::move(result.payload);
}

void ClientModel::store(const Query& q, ResponseEnvelope payload) {
  std::lock_guard lock(mu_);
  cache_.store(q, std::move(payload));
  ++counters_.stores;
}

std::string ClientModel::to_xml(const ResponseEnvelope& resp) const { return encode_response(resp); }

ClientModelCounters ClientModel::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

std::vector<std::string> ClientModel::cached_keys() const {
  std::lock_guard lock(mu_);
  return cache_.keys_by_recency();
}

DataCache ClientModel::snapshot() const {
  std::lock_guard lock(mu_);
  return cache_;
}

void ClientModel::replace_cache(DataCache cache) {
  std::lock_guard lock(mu_);
  cache_ = std::move(cache);
}

CacheFileLock::CacheFileLock(const std::filesystem::path& cache_path) {
  auto lock_path = cache_path;
  lock_path += ".lock";
  fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(Errc::io_error, "cannot open " + lock_path.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(Errc::lock_held, cache_path.string() + " is in use by another client");
  }
}

CacheFileLock::~CacheFileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// ---------------------------------------------------------------------------
// Client Controller

ClientController::ClientController(ClientOptions options, std::unique_ptr<Transport> transport, CostMeter* meter)
    : options_(std::move(options)), transport_(std::move(transport)), model_(options_.cache_capacity, meter) {}

ClientController::~ClientController() = default;

std::string ClientController::next_request_id() {
  return options_.client_id + "-" + std::to_string(++sequence_);
}

Transaction ClientController::request(const Query& q) {
  std::lock_guard lock(mu_);
  ++transactions_;
  Transaction tx;
  tx.trace.transaction_id = next_request_id();
  auto& steps = tx.trace.steps;

  steps.push_back(Step::s01);  // view request reaches CC
  if (!q.valid()) {
    tx.response = ResponseEnvelope::failure(tx.trace.transaction_id, ErrorCode::malformed);
    steps.push_back(Step::fail);
    return tx;
  }
  steps.push_back(Step::s02);  // CC hands the query to CM
  std::optional<ResponseEnvelope> cached = model_.lookup(q);
  steps.push_back(Step::s03);  // CM answers from DC or signals CACHE_MISS
  steps.push_back(Step::s04);  // CC branches on the answer

  if (cached) {
    cached->request_id = tx.trace.transaction_id;
    steps.push_back(Step::s05);  // CC asks CM for the document
    tx.document = model_.to_xml(*cached);
    steps.push_back(Step::s06);  // CM returns it; CC forwards to the view
    tx.response = std::move(*cached);
    steps.push_back(Step::s07);  // view renders
    tx.trace.outcome = Outcome::hit;
    return tx;
  }

  RequestEnvelope req{tx.trace.transaction_id, options_.client_id, options_.token, q};
  steps.push_back(Step::s08);  // CC forwards to SC
  ResponseEnvelope resp = transport_->roundtrip(req);
  if (resp.request_id != req.request_id) {
    throw Error(Errc::malformed, "response id '" + resp.request_id + "' does not echo '" + req.request_id + "'");
  }

  if (!resp.ok()) {
    // UNAUTHORIZED and MALFORMED stop at SC; NOT_FOUND got as far as the store.
    if (resp.error_code == ErrorCode::not_found) {
      steps.push_back(Step::s09);
      steps.push_back(Step::s10);
    }
    steps.push_back(Step::fail);
    tx.trace.outcome = Outcome::failed;
    tx.response = std::move(resp);
    return tx;
  }

  steps.push_back(Step::s09);  // SC asked SM
  steps.push_back(Step::s10);  // SM read DS
  steps.push_back(Step::s11);  // SC replied to CC
  steps.push_back(Step::s12);  // CC asks CM to store and encode
  model_.store(q, resp);
  tx.document = model_.to_xml(resp);
  steps.push_back(Step::s13);
  tx.response = std::move(resp);
  steps.push_back(Step::s14);  // CC forwards to the view
  steps.push_back(Step::s15);  // view renders
  tx.trace.outcome = Outcome::miss_served;
  return tx;
}

void ClientController::attach_cache_file(const std::filesystem::path& path) {
  auto lock = std::make_unique<CacheFileLock>(path);
  model_.replace_cache(DataCache::load(path, options_.cache_capacity));
  cache_lock_ = std::move(lock);
  cache_path_ = path;
}

void ClientController::persist_cache() const {
  if (cache_path_) model_.snapshot().save(*cache_path_);
}

ClientCounters ClientController::counters() const {
  ClientCounters c;
  c.transactions = transactions_;
  c.model = model_.counters();
  return c;
}

std::vector<std::string> ClientController::cached_keys() const { return model_.cached_keys(); }

// ---------------------------------------------------------------------------

ClientConfig ClientConfig::from(const KeyValueConfig& kv) {
  kv.require_known({"server", "client_id", "token", "cache", "capacity", "mode", "store", "store_server", "stats",
                    "cost_model", "scan_cost", "rtt_cost"});
  ClientConfig cfg;
  cfg.server_address = kv.get_or("server", cfg.server_address);
  net::parse_host_port(cfg.server_address);
  cfg.options.client_id = kv.get_or("client_id", cfg.options.client_id);
  cfg.options.token = kv.get_or("token", "");
  cfg.options.cache_capacity = kv.get_uint("capacity", cfg.options.cache_capacity);
  if (cfg.options.cache_capacity == 0) throw Error(Errc::config_error, "capacity must be at least 1");
  if (auto cache = kv.get("cache")) cfg.cache_path = kv.resolve(*cache);
  cfg.mode = parse_mode(kv.get_or("mode", "spim"));
  for (const auto& s : kv.get_all("store")) {
    for (const auto& p : split_list(s)) cfg.replica_store_paths.push_back(kv.resolve(p));
  }
  if (auto host = kv.get("store_server")) {
    net::parse_host_port(*host);
    cfg.replica_store_server = *host;
  }
  if (cfg.mode == Mode::dmvc && cfg.replica_store_paths.empty() == !cfg.replica_store_server.has_value()) {
    throw Error(Errc::config_error,
                "dmvc mode needs exactly one of store=<csv path> or store_server=<host:port> for the client-side "
                "store view");
  }
  if (auto stats = kv.get("stats")) cfg.stats_path = kv.resolve(*stats);
  if (kv.get_bool("cost_model", false)) {
    CostModel m;
    m.enabled = true;
    m.scan_cost = kv.get_double("scan_cost", m.scan_cost);
    m.rtt_cost = kv.get_double("rtt_cost", m.rtt_cost);
    if (m.scan_cost < 0 || m.rtt_cost < 0) throw Error(Errc::config_error, "costs must be non-negative");
    cfg.cost_model = m;
  }
  return cfg;
}

}  // namespace spim
