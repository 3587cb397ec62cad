#include <random>

#include "doctest.h"
#include "spim/wire.hpp"
#include "support.hpp"

using namespace spim;
using spim::test::errc_of;

namespace {

RequestEnvelope sample_request() { return RequestEnvelope{"R-1", "c1", "t", Query{"records", 1, 1000}}; }

std::string bytes(std::initializer_list<unsigned char> list) { return std::string(list.begin(), list.end()); }

}  // namespace

TEST_CASE("request encodes to the documented shape") {
  std::string doc = encode_request(sample_request());
  CHECK(doc ==
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>"
        "<spim-request id=\"R-1\" client-id=\"c1\" token=\"t\"><select table=\"records\">"
        "<range from=\"1\" to=\"1000\"/></select></spim-request>");
  CHECK(encode_request(sample_request()) == doc);
}

TEST_CASE("degenerate range keeps from == to") {
  auto req = sample_request();
  req.query = {"records", 5, 5};
  std::string doc = encode_request(req);
  CHECK(doc.find("from=\"5\" to=\"5\"") != std::string::npos);
  CHECK(decode_request(doc) == req);
}

TEST_CASE("request decoding rejects bad documents") {
  CHECK(errc_of([] { decode_request("<html></html>"); }) == Errc::malformed);
  CHECK(errc_of([] { decode_request(""); }) == Errc::malformed);
  CHECK(errc_of([] { decode_request("<spim-request"); }) == Errc::malformed);
  auto req = sample_request();
  std::string doc = encode_request(req);

  std::string reversed = doc;
  reversed.replace(reversed.find("from=\"1\" to=\"1000\""), 18, "from=\"10\" to=\"2\"");
  CHECK(errc_of([&] { decode_request(reversed); }) == Errc::malformed);

  std::string extra = doc;
  extra.replace(extra.find("token="), 6, "bogus=\"x\" token=");
  CHECK(errc_of([&] { decode_request(extra); }) == Errc::malformed);

  std::string bad_table = doc;
  bad_table.replace(bad_table.find("records"), 7, "rec ords");
  CHECK(errc_of([&] { decode_request(bad_table); }) == Errc::malformed);

  std::string bad_number = doc;
  bad_number.replace(bad_number.find("to=\"1000\""), 9, "to=\"1e3\"");
  CHECK(errc_of([&] { decode_request(bad_number); }) == Errc::malformed);

  std::string overflow = doc;
  overflow.replace(overflow.find("to=\"1000\""), 9, "to=\"18446744073709551616\"");
  CHECK(errc_of([&] { decode_request(overflow); }) == Errc::malformed);

  CHECK(errc_of([&] { decode_request(doc + "<x/>"); }) == Errc::malformed);
}

TEST_CASE("encoders refuse envelopes that break their invariants") {
  auto req = sample_request();
  req.query.key_from = 9;
  req.query.key_to = 3;
  CHECK(errc_of([&] { encode_request(req); }) == Errc::contract_violation);
  req = sample_request();
  req.request_id.clear();
  CHECK(errc_of([&] { encode_request(req); }) == Errc::contract_violation);

  auto dup = ResponseEnvelope::success("R", Source::store, {Record{1, {}}, Record{1, {}}});
  CHECK_FALSE(dup.valid());
  CHECK(errc_of([&] { encode_response(dup); }) == Errc::contract_violation);

  ResponseEnvelope incoherent = ResponseEnvelope::failure("R", ErrorCode::not_found);
  incoherent.records.push_back(Record{1, {}});
  CHECK(errc_of([&] { encode_response(incoherent); }) == Errc::contract_violation);
}

TEST_CASE("response count and error shape") {
  auto ok = ResponseEnvelope::success("R-2", Source::store,
                                      {Record{1, {{"a", "x"}}}, Record{2, {{"a", "y"}}}, Record{3, {{"a", "z"}}}});
  std::string doc = encode_response(ok);
  CHECK(doc.find("count=\"3\"") != std::string::npos);
  CHECK(decode_response(doc) == ok);

  auto denied = ResponseEnvelope::failure("R-3", ErrorCode::unauthorized);
  std::string err = encode_response(denied);
  CHECK(err.find("<record ") == std::string::npos);
  CHECK(err.find("count=\"0\"") != std::string::npos);
  auto back = decode_response(err);
  CHECK(back.status == Status::error);
  CHECK(back.error_code == ErrorCode::unauthorized);
  CHECK(back.records.empty());

  std::string lying = doc;
  lying.replace(lying.find("count=\"3\""), 9, "count=\"4\"");
  CHECK(errc_of([&] { decode_response(lying); }) == Errc::malformed);
}

TEST_CASE("markup in values is escaped and restored") {
  CHECK(xml_escape("a&b<c>d\"e'f") == "a&amp;b&lt;c&gt;d&quot;e&apos;f");
  auto resp = ResponseEnvelope::success("<id & \"x\">", Source::cache,
                                        {Record{7, {{"name", "</f></record>"}, {"q", "'&amp;'"}}}});
  CHECK(decode_response(encode_response(resp)) == resp);
}

TEST_CASE("property: codec round trip on random envelopes") {
  std::mt19937_64 rng(20240501);
  for (int i = 0; i < 2000; ++i) {
    auto req = test::random_request(rng);
    REQUIRE(decode_request(encode_request(req)) == req);
    auto resp = test::random_response(rng);
    REQUIRE(resp.valid());
    std::string doc = encode_response(resp);
    REQUIRE(decode_response(doc) == resp);
    REQUIRE(encode_response(decode_response(doc)) == doc);
  }
}

TEST_CASE("property: decoders never crash on mutated input") {
  std::mt19937_64 rng(99);
  std::string base = encode_response(
      ResponseEnvelope::success("R-9", Source::store, {Record{1, {{"a", "b"}}}, Record{2, {{"a", "c"}}}}));
  for (int i = 0; i < 3000; ++i) {
    std::string doc = base;
    int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      std::size_t pos = rng() % doc.size();
      switch (rng() % 3) {
        case 0: doc[pos] = static_cast<char>(rng() % 256); break;
        case 1: doc.erase(pos, 1 + rng() % 8); break;
        default: doc.insert(pos, 1, "<>&\"'/= x"[rng() % 9]); break;
      }
      if (doc.empty()) break;
    }
    try {
      auto r = decode_response(doc);
      CHECK(r.valid());
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed);
    }
    try {
      decode_request(doc);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed);
    }
  }
}

TEST_CASE("framing") {
  CHECK(frame("hello") == bytes({0, 0, 0, 5, 'h', 'e', 'l', 'l', 'o'}));
  CHECK(frame("") == bytes({0, 0, 0, 0}));

  auto d = deframe(frame("hello") + "tail");
  CHECK(d.payload == "hello");
  CHECK(d.consumed == 9);

  CHECK(errc_of([] { deframe(bytes({0, 0, 0, 0x0A, 'a', 'b', 'c'})); }) == Errc::truncated);
  CHECK(errc_of([] { deframe(bytes({0, 0})); }) == Errc::truncated);
  CHECK(errc_of([] { deframe(bytes({0, 0, 1, 0, 'a'}), 255); }) == Errc::oversize);
  CHECK(errc_of([] { deframe(bytes({0xFF, 0xFF, 0xFF, 0xFF})); }) == Errc::oversize);

  std::string big(300, 'x');
  CHECK(deframe(frame(big)).payload == big);
}

TEST_CASE("property: stream deframer reassembles arbitrary chunking") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> docs;
    std::string stream;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 6); i < n; ++i) {
      docs.push_back(test::random_text(rng, 40));
      stream += frame(docs.back());
    }
    StreamDeframer deframer;
    std::vector<std::string> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      std::size_t chunk = 1 + rng() % 7;
      deframer.feed(std::string_view(stream).substr(pos, chunk));
      pos += chunk;
      while (auto p = deframer.next()) got.push_back(*p);
    }
    CHECK_NOTHROW(deframer.finish());
    CHECK(got == docs);
    CHECK(deframer.buffered() == 0);
  }
}

TEST_CASE("stream deframer reports partial and oversize frames") {
  StreamDeframer partial;
  partial.feed(bytes({0, 0, 0, 4, 'a'}));
  CHECK_FALSE(partial.next().has_value());
  CHECK(errc_of([&] { partial.finish(); }) == Errc::truncated);

  StreamDeframer small(8);
  small.feed(bytes({0, 0, 0, 9}));
  CHECK(errc_of([&] { small.next(); }) == Errc::oversize);
}

TEST_CASE("canonical query keys") {
  Query q{"records", 1, 1000};
  CHECK(q.canonical_key() == "records:1:1000");
  CHECK(Query::from_canonical_key("records:1:1000") == q);
  CHECK_FALSE(Query::from_canonical_key("records:5:1").has_value());
  CHECK_FALSE(Query::from_canonical_key("rec ords:1:2").has_value());
  CHECK_FALSE(Query::from_canonical_key("records:1").has_value());
  CHECK(Query{"records", 1, 1000}.canonical_key() != Query{"records", 1, 999}.canonical_key());
  CHECK_FALSE(is_valid_table_name(""));
  CHECK(is_valid_table_name("Tab_1"));
}
