// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "spim/bench.hpp"
#include "spim/client.hpp"
#include "spim/dmvc.hpp"
#include "spim/fixtures.hpp"
#include "spim/server.hpp"
#include "spim/stats.hpp"
#include "support.hpp"

using namespace spim;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

std::vector<bench::BenchReport> g_sweep;
double g_sweep_seconds = 0;

const std::vector<bench::BenchReport>& default_sweep() {
  if (g_sweep.empty()) {
    auto t0 = Clock::now();
    g_sweep = bench::run_suite(bench::BenchConfig{});
    g_sweep_seconds = seconds_since(t0);
  }
  return g_sweep;
}

const bench::BenchReport& report_for(bench::Case c) {
  for (const auto& r : default_sweep()) {
    if (r.bench_case == c) return r;
  }
  throw std::runtime_error("sweep has no report for a case");
}

Verdict ac1_store_fetch_speedup() {
  Verdict v;
  const auto& report = report_for(bench::Case::store_fetch);
  if (report.rows.size() != 30) v.fail(fmt::format("{} rows, expected 30", report.rows.size()));
  for (const auto& row : report.rows) {
    if (!row.decrease_pct || std::abs(*row.decrease_pct - 50.0) > 2.0) {
      v.fail(fmt::format("row {} decrease {}", row.records, bench::format_2dp(row.decrease_pct)));
    }
  }
  double avg = report.average_decrease.value_or(NAN);
  if (!(avg >= 48.73 && avg <= 52.73)) v.fail(fmt::format("average {:.2f} outside [48.73, 52.73]", avg));
  if (g_sweep_seconds >= 60) v.fail(fmt::format("sweep took {:.1f} s", g_sweep_seconds));
  if (v.pass) {
    v.detail = fmt::format("30 rows at 50.00 ± 2.00, average {:.2f} (published 50.73), sweep {:.1f} s", avg,
                           g_sweep_seconds);
  }
  return v;
}

Verdict ac2_cache_fetch_parity() {
  Verdict v;
  const auto& report = report_for(bench::Case::cache_fetch);
  double worst = 0;
  for (const auto& row : report.rows) {
    if (!row.decrease_pct) {
      v.fail(fmt::format("row {} has no decrease", row.records));
      continue;
    }
    worst = std::max(worst, std::abs(*row.decrease_pct));
    if (std::abs(*row.decrease_pct) > 3.0) v.fail(fmt::format("row {} |decrease| {:.2f} > 3.00", row.records, *row.decrease_pct));
  }
  if (v.pass) {
    v.detail = fmt::format("{} rows, max |decrease| {:.2f}, average {:.2f} (published 1.25)", report.rows.size(),
                           worst, report.average_decrease.value_or(NAN));
  }
  return v;
}

Verdict ac3_sigma_oracle() {
  Verdict v;
  auto t0 = Clock::now();
  auto checks = fixtures::verify(fixtures::builtin_table1(), fixtures::builtin_table2());
  double elapsed = seconds_since(t0);
  std::vector<std::string> seen;
  for (const auto& c : checks) {
    if (c.name.rfind("sigma ", 0) != 0) continue;
    seen.push_back(c.detail);
    if (!c.pass) v.fail(c.name + ": " + c.detail);
  }
  if (seen.size() != 4) v.fail(fmt::format("{} sigma checks, expected 4", seen.size()));
  if (elapsed >= 1.0) v.fail(fmt::format("took {:.3f} s", elapsed));
  if (v.pass) v.detail = fmt::format("4/4 within ±0.5 ({}), {:.3f} s", fmt::join(seen, "; "), elapsed);
  return v;
}

Verdict ac4_decrease_oracle() {
  Verdict v;
  std::vector<std::string> details;
  for (const auto& c : fixtures::verify(fixtures::builtin_table1(), fixtures::builtin_table2())) {
    if (c.name.rfind("decrease_pct ", 0) != 0) continue;
    details.push_back(c.name.substr(13) + " " + c.detail);
    if (!c.pass) v.fail(c.name + ": " + c.detail);
  }
  double example = stats::round_half_up(std::abs(*stats::decrease_pct(141, 62)));
  if (example != 56.03) v.fail(fmt::format("(141,62) gave {:.2f}", example));
  if (details.size() != 2) v.fail("missing a case");
  if (v.pass) v.detail = fmt::format("{}; (141,62) -> 56.03", fmt::join(details, "; "));
  return v;
}

Verdict ac5_protocol_conformance() {
  Verdict v;
  std::mt19937_64 rng(2005);
  std::size_t hits = 0;
  std::size_t misses = 0;
  auto run = [&](ClientController& client, int count) {
    for (int i = 0; i < count; ++i) {
      std::uint64_t a = 1 + rng() % 40;
      auto tx = client.request({"records", a, a + rng() % 4});
      if (tx.trace.outcome == Outcome::hit && tx.trace.steps == StepTrace::hit_sequence()) {
        ++hits;
      } else if (tx.trace.outcome == Outcome::miss_served && tx.trace.steps == StepTrace::miss_sequence()) {
        ++misses;
      } else {
        v.fail(fmt::format("non-canonical trace in transaction {}", tx.trace.transaction_id));
      }
    }
  };
  auto store = test::make_store(500);
  ServerController server(store, AccessPolicy::tokens({"k"}));
  ClientController local({"local", "k", 16}, std::make_unique<InProcessTransport>(server));
  run(local, 1200);

  ServerConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.access = AccessPolicy::tokens({"k"});
  auto tcp_server = Server::start(cfg, store);
  ClientController remote({"remote", "k", 16},
                          std::make_unique<TcpTransport>(net::HostPort{"127.0.0.1", tcp_server->port()}));
  run(remote, 300);
  tcp_server->stop();

  if (hits == 0 || misses == 0) v.fail("workload did not exercise both paths");
  if (v.pass) v.detail = fmt::format("{} transactions: {} HIT, {} MISS_SERVED, 0 other", hits + misses, hits, misses);
  return v;
}

Verdict ac6_tier_separation() {
  Verdict v;
  std::mt19937_64 rng(2006);
  auto store = test::make_store(400);
  ServerController server(store, AccessPolicy::open());
  ClientController client({"c", "", 8}, std::make_unique<InProcessTransport>(server));
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t a = 1 + rng() % 450;  // some ranges miss the table entirely
    client.request({rng() % 10 == 0 ? "absent" : "records", a, a + rng() % 20});
  }
  auto sc = server.counters();
  auto cc = client.counters();
  if (sc.dc_reads_attempted_by_sm != 0) v.fail(fmt::format("SM cache reads {}", sc.dc_reads_attempted_by_sm));
  if (cc.model.ds_reads_attempted != 0) v.fail(fmt::format("CM store reads {}", cc.model.ds_reads_attempted));

  ServerController dmvc_server(store, AccessPolicy::open(), Mode::dmvc);
  DmvcController dmvc({"d", "", 64}, std::make_unique<InProcessTransport>(dmvc_server), store);
  int cold = 0;
  for (std::uint64_t a = 1; a <= 200; a += 4) {
    auto tx = dmvc.request({"records", a, a + 3});
    ++cold;
    DmvcCounters want{1, 1, 1, 1, 1};
    if (!(tx.delta == want)) v.fail(fmt::format("cold miss at {} delta {}", a, format_counters(tx.delta)));
  }
  if (v.pass) {
    v.detail = fmt::format("SPIM after 1000 requests: SM cache reads 0, CM store reads 0; dmvc {} cold misses each (1,1,1,1)",
                           cold);
  }
  return v;
}

Verdict ac7_security_gate() {
  Verdict v;
  std::mt19937_64 rng(2007);
  auto store = test::make_store(100);
  ServerController server(store, AccessPolicy::tokens({"correct-horse"}));
  int denied = 0;
  int total = 0;
  auto probe = [&](Transport& transport, const std::string& token) {
    auto before = server.counters();
    auto resp = transport.roundtrip({"R-" + std::to_string(total), "intruder", token, {"records", 1, 10}});
    ++total;
    auto after = server.counters();
    if (resp.error_code == ErrorCode::unauthorized && after.ds_scans == before.ds_scans &&
        after.sm_invocations == before.sm_invocations) {
      ++denied;
    } else {
      v.fail(fmt::format("token '{}' got {}", token, to_string(resp.error_code)));
    }
  };
  InProcessTransport local(server);
  for (int i = 0; i < 500; ++i) {
    std::string token = test::random_text(rng, 16);
    if (token == "correct-horse") continue;
    probe(local, token);
  }
  for (const char* near : {"", "correct-hors", "correct-horse ", "Correct-horse", "correct-horsf", "correct-horse\n"}) {
    probe(local, near);
  }
  ServerConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.access = AccessPolicy::tokens({"correct-horse"});
  auto tcp_server = Server::start(cfg, store);
  TcpTransport remote({"127.0.0.1", tcp_server->port()});
  for (int i = 0; i < 100; ++i) {
    auto before = tcp_server->counters();
    auto resp = remote.roundtrip({"T-" + std::to_string(i), "intruder", test::random_name(rng), {"records", 1, 10}});
    ++total;
    if (resp.error_code == ErrorCode::unauthorized && tcp_server->counters().ds_scans == before.ds_scans) {
      ++denied;
    } else {
      v.fail("tcp request slipped through");
    }
  }
  tcp_server->stop();
  if (!InProcessTransport(server).roundtrip({"ok", "c", "correct-horse", {"records", 1, 1}}).ok()) {
    v.fail("valid token rejected");
  }
  if (v.pass) v.detail = fmt::format("{}/{} bad-token requests UNAUTHORIZED, DS scans unchanged", denied, total);
  return v;
}

Verdict ac8_codec_and_cache() {
  Verdict v;
  std::mt19937_64 rng(2008);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    auto req = test::random_request(rng);
    auto resp = test::random_response(rng);
    if (!(decode_request(encode_request(req)) == req) || !(decode_response(encode_response(resp)) == resp)) {
      v.fail(fmt::format("codec round trip broke at iteration {}", i));
      break;
    }
    ++round_trips;
  }

  int sequences = 0;
  for (int round = 0; round < 200 && v.pass; ++round) {
    std::size_t cap = 1 + rng() % 16;
    DataCache cache(cap);
    test::OracleLru oracle(cap);
    std::size_t ops = 1 + rng() % 1000;
    for (std::size_t i = 0; i < ops; ++i) {
      std::uint64_t k = rng() % (2 * cap + 1);
      Query q{"records", k, k};
      if (rng() % 2) {
        auto p = ResponseEnvelope::success("x", Source::store, {Record{k, {{"i", std::to_string(i)}}}});
        cache.store(q, p);
        oracle.store(q.canonical_key(), p);
      } else {
        auto got = cache.lookup(q);
        auto want = oracle.lookup(q.canonical_key());
        if (got.hit() != want.has_value() || (want && got.payload->records != want->records)) {
          v.fail(fmt::format("LRU diverged: round {} op {}", round, i));
          break;
        }
      }
      if (cache.keys_by_recency() != oracle.keys()) {
        v.fail(fmt::format("LRU order diverged: round {} op {}", round, i));
        break;
      }
    }
    ++sequences;
  }

  test::TempDir dir;
  int saves = 0;
  for (int round = 0; round < 100 && v.pass; ++round) {
    DataCache cache(1 + rng() % 16);
    for (int i = 0, n = static_cast<int>(rng() % 40); i < n; ++i) {
      auto resp = test::random_response(rng);
      if (resp.ok()) cache.store(test::random_query(rng), resp);
    }
    cache.save(dir / "dc.txt");
    auto loaded = DataCache::load(dir / "dc.txt", cache.capacity());
    if (!std::equal(loaded.entries().begin(), loaded.entries().end(), cache.entries().begin(), cache.entries().end())) {
      v.fail(fmt::format("save/load lost data in round {}", round));
    }
    ++saves;
  }
  if (v.pass) {
    v.detail = fmt::format("{} codec round trips, {} LRU sequences vs oracle, {} save/load round trips", round_trips,
                           sequences, saves);
  }
  return v;
}

Verdict ac9_wall_clock_ordering() {
  Verdict v;
  bench::BenchConfig cfg;
  cfg.cost.enabled = false;
  cfg.repeats = 5;
  std::vector<std::string> rows;
  for (std::uint64_t n : {10000u, 20000u, 30000u}) {
    auto store = std::make_shared<DataStore>();
    store->add_table(Table::from_csv("records", bench::generate_store(n, cfg.seed, cfg.payload_bytes)));
    double dmvc = bench::run_case(bench::Case::store_fetch, Mode::dmvc, store, n, cfg);
    double spim = bench::run_case(bench::Case::store_fetch, Mode::spim, store, n, cfg);
    rows.push_back(fmt::format("n={} dmvc {:.2f} ms > spim {:.2f} ms", n, dmvc, spim));
    if (!(dmvc > spim)) v.fail(fmt::format("n={}: dmvc {:.3f} ms not above spim {:.3f} ms", n, dmvc, spim));
  }
  if (v.pass) v.detail = fmt::format("{}", fmt::join(rows, "; "));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"AC1 store-fetch speedup", ac1_store_fetch_speedup},
      {"AC2 cache-fetch parity", ac2_cache_fetch_parity},
      {"AC3 sigma oracle", ac3_sigma_oracle},
      {"AC4 decrease oracle", ac4_decrease_oracle},
      {"AC5 protocol conformance", ac5_protocol_conformance},
      {"AC6 tier separation", ac6_tier_separation},
      {"AC7 security gate", ac7_security_gate},
      {"AC8 codec and cache properties", ac8_codec_and_cache},
      {"AC9 wall-clock ordering", ac9_wall_clock_ordering},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.fail(std::string("threw: ") + e.what());
    }
    fmt::print("{} {}: {}\n", v.pass ? "PASS" : "FAIL", name, v.detail);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
