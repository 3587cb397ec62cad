#include <random>

#include "doctest.h"
#include "spim/client.hpp"
#include "spim/dmvc.hpp"
#include "support.hpp"

using namespace spim;

namespace {

DmvcCounters delta(std::uint64_t cm_cache, std::uint64_t cm_ds, std::uint64_t sm_cache, std::uint64_t sm_ds,
                   std::uint64_t sync) {
  return DmvcCounters{cm_cache, cm_ds, sm_cache, sm_ds, sync};
}

}  // namespace

TEST_CASE("cold fetch advances every scan counter once; repeat only the client cache") {
  auto store = test::make_store(500);
  ServerController server(store, AccessPolicy::open(), Mode::dmvc);
  DmvcController client({}, std::make_unique<InProcessTransport>(server), store);
  Query q{"records", 1, 500};

  auto cold = client.request(q);
  CHECK(cold.response.ok());
  CHECK(cold.response.source == Source::store);
  CHECK(cold.delta == delta(1, 1, 1, 1, 1));

  auto warm = client.request(q);
  CHECK(warm.response.source == Source::cache);
  CHECK(warm.delta == delta(1, 0, 0, 0, 0));
  CHECK(warm.response.records == cold.response.records);
  CHECK(client.counters() == delta(2, 1, 1, 1, 1));
  CHECK(format_counters(client.counters()).find("sync_messages=1\n") != std::string::npos);
}

TEST_CASE("synchronization leaves both tiers able to hit") {
  auto store = test::make_store(100);
  ServerController server(store, AccessPolicy::open(), Mode::dmvc);
  DmvcController client({}, std::make_unique<InProcessTransport>(server), store);
  for (std::uint64_t k = 1; k <= 4; ++k) client.request({"records", k, k + 5});
  CHECK(client.counters().sync_messages == 4);
  CHECK(client.cached_keys().size() == 4);

  // A second dmvc client on the same server misses locally but hits the SM replica.
  DmvcController other({"other", "", 64}, std::make_unique<InProcessTransport>(server), store);
  auto tx = other.request({"records", 1, 6});
  CHECK(tx.response.source == Source::cache);
  CHECK(tx.delta.sm_cache_scans == 1);
  CHECK(tx.delta.sm_ds_scans == 0);
  CHECK(server.counters().replica_writes == 4);
}

TEST_CASE("dmvc returns the same records as SPIM") {
  auto store = test::make_store(300);
  ServerController spim_server(store, AccessPolicy::open());
  ServerController dmvc_server(store, AccessPolicy::open(), Mode::dmvc);
  ClientController spim_client({}, std::make_unique<InProcessTransport>(spim_server));
  DmvcController dmvc_client({}, std::make_unique<InProcessTransport>(dmvc_server), store);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    std::uint64_t a = 1 + rng() % 320;
    Query q{"records", a, a + rng() % 15};
    auto s = spim_client.request(q).response;
    auto d = dmvc_client.request(q).response;
    REQUIRE(s.status == d.status);
    REQUIRE(s.error_code == d.error_code);
    REQUIRE(s.records == d.records);
  }
}

TEST_CASE("dmvc failures are not synchronized") {
  auto store = test::make_store(10);
  ServerController server(store, AccessPolicy::tokens({"t"}), Mode::dmvc);
  DmvcController denied({"c", "bad", 64}, std::make_unique<InProcessTransport>(server), store);
  auto tx = denied.request({"records", 1, 2});
  CHECK(tx.response.error_code == ErrorCode::unauthorized);
  CHECK(tx.delta.sync_messages == 0);
  CHECK(tx.delta.sm_ds_scans == 0);
  CHECK(denied.cached_keys().empty());

  DmvcController allowed({"c", "t", 64}, std::make_unique<InProcessTransport>(server), store);
  auto missing = allowed.request({"absent", 1, 2});
  CHECK(missing.response.error_code == ErrorCode::not_found);
  CHECK(missing.delta.sync_messages == 0);
  CHECK(allowed.request({"records", 3, 1}).response.error_code == ErrorCode::malformed);
}

TEST_CASE("cost of a cold store fetch is twice SPIM's") {
  for (std::uint64_t n : {1000u, 2500u}) {
    auto store = test::make_store(n);
    CostMeter spim_meter(CostModel{1, 0, true});
    CostMeter dmvc_meter(CostModel{1, 0, true});
    ServerController spim_server(store, AccessPolicy::open(), Mode::spim, &spim_meter);
    ServerController dmvc_server(store, AccessPolicy::open(), Mode::dmvc, &dmvc_meter);
    ClientController spim_client({}, std::make_unique<InProcessTransport>(spim_server, &spim_meter), &spim_meter);
    DmvcController dmvc_client({}, std::make_unique<InProcessTransport>(dmvc_server, &dmvc_meter), store,
                               &dmvc_meter);
    spim_client.request({"records", 1, n});
    dmvc_client.request({"records", 1, n});
    CHECK(spim_meter.total() == static_cast<double>(n));
    CHECK(dmvc_meter.total() == static_cast<double>(2 * n));

    // With a round-trip cost, SPIM pays one trip and dmvc two.
    CostMeter spim_rtt(CostModel{1, 10, true});
    CostMeter dmvc_rtt(CostModel{1, 10, true});
    ServerController s2(store, AccessPolicy::open(), Mode::spim, &spim_rtt);
    ServerController d2(store, AccessPolicy::open(), Mode::dmvc, &dmvc_rtt);
    ClientController c2({}, std::make_unique<InProcessTransport>(s2, &spim_rtt), &spim_rtt);
    DmvcController dc2({}, std::make_unique<InProcessTransport>(d2, &dmvc_rtt), store, &dmvc_rtt);
    c2.request({"records", 1, n});
    dc2.request({"records", 1, n});
    CHECK(spim_rtt.total() == static_cast<double>(n + 10));
    CHECK(dmvc_rtt.total() == static_cast<double>(2 * n + 20));
  }
}

TEST_CASE("counter subtraction") {
  CHECK(delta(5, 4, 3, 2, 1) - delta(1, 1, 1, 1, 1) == delta(4, 3, 2, 1, 0));
}

TEST_CASE("remote store view pays a real round trip per redundant scan") {
  auto store = test::make_store(200);
  ServerConfig host_cfg;
  host_cfg.listen = "127.0.0.1:0";
  auto store_host = Server::start(host_cfg, store);
  ServerController server(store, AccessPolicy::open(), Mode::dmvc);

  auto view = std::make_unique<RemoteStoreView>(
      std::make_unique<TcpTransport>(net::HostPort{"127.0.0.1", store_host->port()}), "d", "");
  DmvcController client({}, std::make_unique<InProcessTransport>(server), std::move(view));
  auto cold = client.request({"records", 1, 50});
  CHECK(cold.delta == delta(1, 1, 1, 1, 1));
  CHECK(cold.response.records.size() == 50);
  client.request({"records", 1, 50});
  CHECK(store_host->counters().sc_requests == 1);  // hits never reach the store host

  CHECK(client.request({"records", 999, 1000}).response.error_code == ErrorCode::not_found);
  CHECK(store_host->counters().sc_requests == 2);
  store_host->stop();
}

TEST_CASE("local store view counts the whole table even when nothing matches") {
  LocalStoreView view(test::make_store(30));
  CHECK(view.scan({"records", 1, 5}) == 30);
  CHECK(view.scan({"records", 100, 200}) == 30);
  CHECK(view.scan({"absent", 1, 1}) == 0);
}
