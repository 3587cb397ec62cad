#include <fstream>

#include "doctest.h"
#include "spim/config.hpp"
#include "spim/fixtures.hpp"
#include "spim/net.hpp"
#include "support.hpp"

using namespace spim;
using spim::test::errc_of;

TEST_CASE("key=value parsing") {
  auto kv = KeyValueConfig::parse("# comment\n  a = 1 \n\nb=two=three\na=2\nflag=on\nx=\r\n");
  CHECK(*kv.get("a") == "2");
  CHECK(kv.get_all("a") == std::vector<std::string>{"1", "2"});
  CHECK(*kv.get("b") == "two=three");
  CHECK(kv.get("x")->empty());
  CHECK_FALSE(kv.get("missing").has_value());
  CHECK(kv.get_or("missing", "d") == "d");
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_uint("a", 0) == 2);
  CHECK(kv.get_double("a", 0) == 2.0);
  CHECK_NOTHROW(kv.require_known({"a", "b", "flag", "x"}));
  CHECK(errc_of([&] { kv.require_known({"a"}); }) == Errc::config_error);

  CHECK(errc_of([] { KeyValueConfig::parse("novalue\n"); }) == Errc::config_error);
  CHECK(errc_of([] { KeyValueConfig::parse("=v\n"); }) == Errc::config_error);
  auto typed = KeyValueConfig::parse("n=-3\nb=maybe\nd=abc\n");
  CHECK(errc_of([&] { typed.get_uint("n", 0); }) == Errc::config_error);
  CHECK(errc_of([&] { typed.get_bool("b", false); }) == Errc::config_error);
  CHECK(errc_of([&] { typed.get_double("d", 0); }) == Errc::config_error);
}

TEST_CASE("files resolve relative paths against their directory") {
  test::TempDir dir;
  std::ofstream(dir / "c.conf") << "store=data/x.csv\nabs=/etc/hosts\n";
  auto kv = KeyValueConfig::from_file(dir / "c.conf");
  CHECK(kv.resolve(*kv.get("store")) == dir / "data/x.csv");
  CHECK(kv.resolve(*kv.get("abs")) == "/etc/hosts");
  CHECK(errc_of([&] { KeyValueConfig::from_file(dir / "absent.conf"); }) == Errc::config_error);
}

TEST_CASE("lists and addresses") {
  CHECK(split_list(" a, b ,,c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_list("").empty());
  auto hp = net::parse_host_port("127.0.0.1:7878");
  CHECK(hp.host == "127.0.0.1");
  CHECK(hp.port == 7878);
  for (const char* bad : {"", "host", ":80", "h:", "h:99999", "h:8x"}) {
    CAPTURE(bad);
    CHECK(errc_of([&] { net::parse_host_port(bad); }) == Errc::config_error);
  }
}

TEST_CASE("shipped fixtures verify") {
  auto checks = fixtures::verify(fixtures::builtin_table1(), fixtures::builtin_table2());
  std::size_t graded = 0;
  for (const auto& c : checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    if (c.informational) continue;
    ++graded;
    CHECK(c.pass);
  }
  CHECK(graded == 6);
}

TEST_CASE("fixture oracle catches tampering") {
  std::string t1(fixtures::builtin_table1());
  auto pos = t1.find("store_fetch,1000,32,16,50.00");
  REQUIRE(pos != std::string::npos);
  t1.replace(pos, 28, "store_fetch,1000,32,16,49.00");
  bool failed = false;
  for (const auto& c : fixtures::verify(t1, fixtures::builtin_table2())) {
    if (c.name == "decrease_pct store_fetch") failed = !c.pass;
  }
  CHECK(failed);

  CHECK(errc_of([] { fixtures::parse_table1("wrong,header\n"); }) == Errc::malformed);
  CHECK(errc_of([] { fixtures::parse_table1("case,records,t1,t2,decrease_pct\nx,1,2,3,4\n"); }) == Errc::malformed);
  CHECK(errc_of([] { fixtures::parse_table2("case,arch,sigma\ncache_fetch,mvc,1\n"); }) == Errc::malformed);
  CHECK(errc_of([] { fixtures::parse_table2("case,arch,sigma\ncache_fetch,spim,abc\n"); }) == Errc::malformed);
}

TEST_CASE("fixture rows parse with blanks preserved") {
  auto reports = fixtures::parse_table1(fixtures::builtin_table1());
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].rows.size() == 30);
  CHECK(reports[1].rows.size() == 30);
  CHECK_FALSE(reports[0].rows[0].decrease_pct.has_value());
  CHECK(reports[1].rows[0].t1 == 32.0);
}
