#include "spim/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "spim/client.hpp"
#include "spim/dmvc.hpp"
#include "spim/error.hpp"
#include "spim/stats.hpp"

namespace spim::bench {

namespace {

constexpr std::string_view kBenchToken = "bench";

std::string format_time(std::optional<double> v) {
  if (!v) return {};
  double r = std::round(*v * 1000.0) / 1000.0;
  return fmt::format("{}", r);
}

ClientOptions bench_options(const BenchConfig& cfg) {
  return ClientOptions{"bench", std::string(kBenchToken), cfg.cache_capacity};
}

AccessPolicy bench_policy() { return AccessPolicy::tokens({std::string(kBenchToken)}); }

// One fetch through the client tier of `mode`; returns the response source.
class Fetcher {
 public:
  // `store_view` is only used in dmvc mode.
  Fetcher(Mode mode, std::unique_ptr<Transport> transport, std::unique_ptr<StoreView> store_view, CostMeter* meter,
          const BenchConfig& cfg) {
    if (mode == Mode::spim) {
      spim_ = std::make_unique<ClientController>(bench_options(cfg), std::move(transport), meter);
    } else {
      dmvc_ = std::make_unique<DmvcController>(bench_options(cfg), std::move(transport), std::move(store_view), meter);
    }
  }

  ResponseEnvelope fetch(const Query& q) {
    return spim_ ? spim_->request(q).response : dmvc_->request(q).response;
  }

  std::size_t cached_entries() const {
    return spim_ ? spim_->cached_keys().size() : dmvc_->cached_keys().size();
  }

 private:
  std::unique_ptr<ClientController> spim_;
  std::unique_ptr<DmvcController> dmvc_;
};

void expect_source(Case c, const ResponseEnvelope& resp) {
  Source wanted = c == Case::cache_fetch ? Source::cache : Source::store;
  if (!resp.ok() || resp.source != wanted) {
    throw Error(Errc::contract_violation, std::string(to_string(c)) + " measured a fetch served from " +
                                              std::string(to_string(resp.source)) + " (" +
                                              std::string(to_string(resp.error_code)) + ")");
  }
}

double run_deterministic(Case c, Mode mode, std::shared_ptr<const DataStore> store, const Query& q,
                         const BenchConfig& cfg) {
  CostMeter meter(cfg.cost);
  ServerController server(store, bench_policy(), mode, &meter, cfg.cache_capacity);
  Fetcher client(mode, std::make_unique<InProcessTransport>(server, &meter), std::make_unique<LocalStoreView>(store),
                 &meter, cfg);
  if (c == Case::cache_fetch) {
    if (!client.fetch(q).ok()) throw Error(Errc::contract_violation, "priming fetch failed");
    meter.reset();
  } else if (client.cached_entries() != 0) {
    throw Error(Errc::contract_violation, "store_fetch requires a cold cache");
  }
  expect_source(c, client.fetch(q));
  double total = meter.total();
  double logged = meter.total_from_log();
  if (std::abs(total - logged) > 1e-9 * std::max(1.0, std::abs(total))) {
    throw Error(Errc::contract_violation,
                fmt::format("cost total {} disagrees with event log sum {}", total, logged));
  }
  return total;
}

double run_wall_clock(Case c, Mode mode, std::shared_ptr<const DataStore> store, const Query& q,
                      const BenchConfig& cfg) {
  double best = std::numeric_limits<double>::infinity();
  for (unsigned rep = 0; rep < std::max(1u, cfg.repeats); ++rep) {
    ServerConfig server_cfg;
    server_cfg.listen = "127.0.0.1:0";
    server_cfg.access = bench_policy();
    server_cfg.mode = mode;
    server_cfg.replica_capacity = cfg.cache_capacity;
    auto server = Server::start(server_cfg, store);
    // dmvc's client model reaches the store over the network too, through a
    // plain store endpoint that keeps its traffic out of the SM's counters.
    std::unique_ptr<Server> store_host;
    std::unique_ptr<StoreView> store_view;
    if (mode == Mode::dmvc) {
      ServerConfig host_cfg = server_cfg;
      host_cfg.mode = Mode::spim;
      store_host = Server::start(host_cfg, store);
      store_view = std::make_unique<RemoteStoreView>(
          std::make_unique<TcpTransport>(net::HostPort{"127.0.0.1", store_host->port()}), "bench",
          std::string(kBenchToken));
    }
    Fetcher client(mode, std::make_unique<TcpTransport>(net::HostPort{"127.0.0.1", server->port()}),
                   std::move(store_view), nullptr, cfg);
    if (c == Case::cache_fetch) {
      if (!client.fetch(q).ok()) throw Error(Errc::contract_violation, "priming fetch failed");
    } else if (client.cached_entries() != 0) {
      throw Error(Errc::contract_violation, "store_fetch requires a cold cache");
    }
    auto start = std::chrono::steady_clock::now();
    ResponseEnvelope resp = client.fetch(q);
    auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    expect_source(c, resp);
    best = std::min(best, elapsed);
    server->stop();
    if (store_host) store_host->stop();
  }
  return best;
}

}  // namespace

std::string_view to_string(Case c) noexcept { return c == Case::cache_fetch ? "cache_fetch" : "store_fetch"; }

std::string format_2dp(std::optional<double> v) {
  if (!v) return {};
  double r = stats::round_half_up(*v, 2);
  if (r == 0.0) r = 0.0;  // no "-0.00"
  return fmt::format("{:.2f}", r);
}

BenchReport summarize(Case c, std::vector<TimingRow> rows) {
  BenchReport report;
  report.bench_case = c;
  std::vector<double> t1s, t2s, decreases;
  for (auto& row : rows) {
    if (row.t1 && row.t2) row.decrease_pct = stats::decrease_pct(*row.t1, *row.t2);
    if (row.t1) t1s.push_back(*row.t1);
    if (row.t2) t2s.push_back(*row.t2);
    if (row.decrease_pct) decreases.push_back(*row.decrease_pct);
  }
  if (!decreases.empty()) report.average_decrease = stats::mean(decreases);
  report.sigma_t1 = stats::sigma(t1s);
  report.sigma_t2 = stats::sigma(t2s);
  report.rows = std::move(rows);
  return report;
}

BenchConfig BenchConfig::from(const KeyValueConfig& kv) {
  kv.require_known({"range", "step", "modes", "cost_model", "scan_cost", "rtt_cost", "seed", "payload", "capacity",
                    "repeats", "outdir"});
  BenchConfig cfg;
  if (auto range = kv.get("range")) {
    auto dots = range->find("..");
    KeyValueConfig pair;
    if (dots == std::string::npos) throw Error(Errc::config_error, "range must be FROM..TO");
    pair.set("from", range->substr(0, dots));
    pair.set("to", range->substr(dots + 2));
    cfg.first = pair.get_uint("from", 0);
    cfg.last = pair.get_uint("to", 0);
  }
  cfg.step = kv.get_uint("step", cfg.step);
  if (cfg.first < 1 || cfg.last < cfg.first || cfg.step < 1) {
    throw Error(Errc::config_error, "need 1 <= from <= to and step >= 1");
  }
  if (auto modes = kv.get("modes")) {
    cfg.run_spim = cfg.run_dmvc = false;
    for (const auto& m : split_list(*modes)) {
      (parse_mode(m) == Mode::spim ? cfg.run_spim : cfg.run_dmvc) = true;
    }
    if (!cfg.run_spim && !cfg.run_dmvc) throw Error(Errc::config_error, "modes lists no mode");
  }
  cfg.cost.enabled = kv.get_bool("cost_model", cfg.cost.enabled);
  cfg.cost.scan_cost = kv.get_double("scan_cost", cfg.cost.scan_cost);
  cfg.cost.rtt_cost = kv.get_double("rtt_cost", cfg.cost.rtt_cost);
  if (cfg.cost.scan_cost < 0 || cfg.cost.rtt_cost < 0) throw Error(Errc::config_error, "costs must be non-negative");
  cfg.seed = kv.get_uint("seed", cfg.seed);
  cfg.payload_bytes = kv.get_uint("payload", cfg.payload_bytes);
  cfg.cache_capacity = kv.get_uint("capacity", cfg.cache_capacity);
  if (cfg.cache_capacity == 0) throw Error(Errc::config_error, "capacity must be at least 1");
  cfg.repeats = static_cast<unsigned>(kv.get_uint("repeats", cfg.repeats));
  if (auto out = kv.get("outdir")) cfg.outdir = kv.resolve(*out);
  return cfg;
}

std::string generate_store(std::uint64_t n, std::uint64_t seed, std::size_t payload_bytes) {
  static constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  // mt19937_64's output sequence is fixed by the standard; the modulo keeps
  // the mapping platform-independent (no distribution objects).
  std::mt19937_64 rng(seed);
  std::string out = "key,payload\n";
  out.reserve(out.size() + n * (payload_bytes + 8));
  for (std::uint64_t key = 1; key <= n; ++key) {
    out += std::to_string(key);
    out += ',';
    for (std::size_t i = 0; i < payload_bytes; ++i) out += kAlphabet[rng() % kAlphabet.size()];
    out += '\n';
  }
  return out;
}

double run_case(Case c, Mode mode, std::shared_ptr<const DataStore> store, std::uint64_t n, const BenchConfig& cfg) {
  const Query q{"records", 1, n};
  return cfg.cost.enabled ? run_deterministic(c, mode, std::move(store), q, cfg)
                          : run_wall_clock(c, mode, std::move(store), q, cfg);
}

std::vector<BenchReport> run_suite(const BenchConfig& cfg) {
  std::vector<TimingRow> cache_rows, store_rows;
  for (std::uint64_t n = cfg.first; n <= cfg.last; n += cfg.step) {
    auto store = std::make_shared<DataStore>();
    store->add_table(Table::from_csv("records", generate_store(n, cfg.seed, cfg.payload_bytes)));
    TimingRow cache_row{n, {}, {}, {}};
    TimingRow store_row{n, {}, {}, {}};
    auto measure = [&](Case c, Mode mode) {
      try {
        return run_case(c, mode, store, n, cfg);
      } catch (const Error& e) {
        throw Error(e.code(), fmt::format("case={} mode={} n={}: {}", to_string(c), to_string(mode), n, e.what()));
      }
    };
    if (cfg.run_dmvc) {
      cache_row.t1 = measure(Case::cache_fetch, Mode::dmvc);
      store_row.t1 = measure(Case::store_fetch, Mode::dmvc);
    }
    if (cfg.run_spim) {
      cache_row.t2 = measure(Case::cache_fetch, Mode::spim);
      store_row.t2 = measure(Case::store_fetch, Mode::spim);
    }
    cache_rows.push_back(cache_row);
    store_rows.push_back(store_row);
    if (n > std::numeric_limits<std::uint64_t>::max() - cfg.step) break;
  }
  return {summarize(Case::cache_fetch, std::move(cache_rows)), summarize(Case::store_fetch, std::move(store_rows))};
}

std::string table1_csv(const std::vector<BenchReport>& reports) {
  std::string out = "case,records,t1,t2,decrease_pct\n";
  for (const auto& report : reports) {
    for (const auto& row : report.rows) {
      out += fmt::format("{},{},{},{},{}\n", to_string(report.bench_case), row.records, format_time(row.t1),
                         format_time(row.t2), format_2dp(row.decrease_pct));
    }
  }
  return out;
}

std::string table2_csv(const std::vector<BenchReport>& reports) {
  std::string out = "case,arch,sigma\n";
  for (const auto& report : reports) {
    if (report.sigma_t1) out += fmt::format("{},dmvc,{}\n", to_string(report.bench_case), format_2dp(report.sigma_t1));
    if (report.sigma_t2) out += fmt::format("{},spim,{}\n", to_string(report.bench_case), format_2dp(report.sigma_t2));
  }
  return out;
}

std::string plotdata_tsv(const std::vector<BenchReport>& reports) {
  std::string out = "# records";
  for (const auto& report : reports) {
    out += fmt::format("\t{0}_dmvc\t{0}_spim", to_string(report.bench_case));
  }
  out += '\n';
  if (reports.empty()) return out;
  for (std::size_t i = 0; i < reports.front().rows.size(); ++i) {
    out += std::to_string(reports.front().rows[i].records);
    for (const auto& report : reports) {
      const TimingRow& row = report.rows.at(i);
      out += '\t' + format_time(row.t1) + '\t' + format_time(row.t2);
    }
    out += '\n';
  }
  return out;
}

void write_reports(const std::vector<BenchReport>& reports, const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(outdir / name, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw Error(Errc::io_error, "cannot write " + (outdir / name).string());
  };
  write("table1.csv", table1_csv(reports));
  write("table2.csv", table2_csv(reports));
  write("plotdata.tsv", plotdata_tsv(reports));
}

}  // namespace spim::bench
