#include "spim/wire.hpp"

#include <charconv>
#include <set>

#include "spim/detail/xml.hpp"
#include "spim/error.hpp"

namespace spim {

using detail::XmlElement;

namespace {

constexpr std::string_view kXmlDecl = R"(<?xml version="1.0" encoding="UTF-8"?>)";

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::malformed, why); }

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (s.empty()) return std::nullopt;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::uint64_t required_u64(const XmlElement& el, std::string_view key) {
  const std::string* raw = el.attribute(key);
  if (raw == nullptr) malformed("<" + el.name + "> missing attribute " + std::string(key));
  auto value = parse_u64(*raw);
  if (!value) malformed("<" + el.name + "> attribute " + std::string(key) + " is not an unsigned integer");
  return *value;
}

const std::string& required(const XmlElement& el, std::string_view key) {
  const std::string* raw = el.attribute(key);
  if (raw == nullptr) malformed("<" + el.name + "> missing attribute " + std::string(key));
  return *raw;
}

void only_attributes(const XmlElement& el, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : el.attributes) {
    bool known = false;
    for (auto a : allowed) known = known || k == a;
    if (!known) malformed("<" + el.name + "> has unexpected attribute " + k);
  }
}

bool blank(std::string_view text) {
  return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

const XmlElement& single_child(const XmlElement& el, std::string_view name) {
  if (el.children.size() != 1 || el.children.front().name != name) {
    malformed("<" + el.name + "> must contain exactly one <" + std::string(name) + ">");
  }
  if (!blank(el.text)) malformed("unexpected text inside <" + el.name + ">");
  return el.children.front();
}

void attr(std::string& out, std::string_view key, std::string_view value) {
  out += ' ';
  out += key;
  out += "=\"";
  out += xml_escape(value);
  out += '"';
}

void attr(std::string& out, std::string_view key, std::uint64_t value) {
  out += ' ';
  out += key;
  out += "=\"";
  out += std::to_string(value);
  out += '"';
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const Enum (&values)[N], std::string_view what) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  malformed("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string Query::canonical_key() const {
  return table + ':' + std::to_string(key_from) + ':' + std::to_string(key_to);
}

std::optional<Query> Query::from_canonical_key(std::string_view key) {
  auto first = key.find(':');
  if (first == std::string_view::npos) return std::nullopt;
  auto second = key.find(':', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  auto from = parse_u64(key.substr(first + 1, second - first - 1));
  auto to = parse_u64(key.substr(second + 1));
  if (!from || !to) return std::nullopt;
  Query q{std::string(key.substr(0, first)), *from, *to};
  if (!q.valid()) return std::nullopt;
  return q;
}

bool Query::valid() const noexcept { return is_valid_table_name(table) && key_from <= key_to; }

bool is_valid_table_name(std::string_view name) noexcept {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

const std::string* Record::field(std::string_view name) const noexcept {
  for (const auto& [k, v] : fields) {
    if (k == name) return &v;
  }
  return nullptr;
}

std::string_view to_string(Status s) noexcept { return s == Status::ok ? "OK" : "ERROR"; }

std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::cache: return "cache";
    case Source::store: return "store";
    case Source::none: return "none";
  }
  return "none";
}

std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::none: return "NONE";
    case ErrorCode::cache_miss: return "CACHE_MISS";
    case ErrorCode::not_found: return "NOT_FOUND";
    case ErrorCode::unauthorized: return "UNAUTHORIZED";
    case ErrorCode::malformed: return "MALFORMED";
  }
  return "NONE";
}

ResponseEnvelope ResponseEnvelope::success(std::string request_id, Source source, std::vector<Record> records) {
  return ResponseEnvelope{std::move(request_id), Status::ok, source, ErrorCode::none, std::move(records)};
}

ResponseEnvelope ResponseEnvelope::failure(std::string request_id, ErrorCode code) {
  return ResponseEnvelope{std::move(request_id), Status::error, Source::none, code, {}};
}

bool ResponseEnvelope::valid() const noexcept {
  if (status == Status::ok) {
    if (error_code != ErrorCode::none || source == Source::none) return false;
  } else {
    if (!records.empty() || error_code == ErrorCode::none) return false;
  }
  // Keys are unique per `_source` tag so that composed responses, which keep
  // duplicate keys from different services, still form valid envelopes.
  std::set<std::pair<std::string_view, std::uint64_t>> keys;
  for (const auto& r : records) {
    const std::string* tag = r.field("_source");
    if (!keys.emplace(tag != nullptr ? std::string_view(*tag) : std::string_view{}, r.key).second) return false;
  }
  return true;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string encode_request(const RequestEnvelope& req) {
  if (req.request_id.empty() || !req.query.valid()) {
    throw Error(Errc::contract_violation, "request envelope violates its invariants");
  }
  std::string out(kXmlDecl);
  out += "<spim-request";
  attr(out, "id", req.request_id);
  attr(out, "client-id", req.client_id);
  attr(out, "token", req.token);
  out += "><select";
  attr(out, "table", req.query.table);
  out += "><range";
  attr(out, "from", req.query.key_from);
  attr(out, "to", req.query.key_to);
  out += "/></select></spim-request>";
  return out;
}

std::string encode_response(const ResponseEnvelope& resp) {
  if (!resp.valid()) throw Error(Errc::contract_violation, "response envelope violates its invariants");
  std::string out(kXmlDecl);
  out += "<spim-response";
  attr(out, "id", resp.request_id);
  attr(out, "status", to_string(resp.status));
  attr(out, "source", to_string(resp.source));
  attr(out, "code", to_string(resp.error_code));
  attr(out, "count", static_cast<std::uint64_t>(resp.records.size()));
  out += "><records>";
  for (const auto& rec : resp.records) {
    out += "<record";
    attr(out, "key", rec.key);
    out += '>';
    for (const auto& [name, value] : rec.fields) {
      out += "<f";
      attr(out, "n", name);
      out += '>';
      out += xml_escape(value);
      out += "</f>";
    }
    out += "</record>";
  }
  out += "</records></spim-response>";
  return out;
}

RequestEnvelope decode_request(std::string_view doc) {
  XmlElement root = detail::parse_xml(doc);
  if (root.name != "spim-request") malformed("unexpected root <" + root.name + ">");
  only_attributes(root, {"id", "client-id", "token"});
  RequestEnvelope req;
  req.request_id = required(root, "id");
  req.client_id = required(root, "client-id");
  req.token = required(root, "token");
  if (req.request_id.empty()) malformed("empty request id");

  const XmlElement& select = single_child(root, "select");
  only_attributes(select, {"table"});
  const XmlElement& range = single_child(select, "range");
  only_attributes(range, {"from", "to"});
  if (!range.children.empty() || !blank(range.text)) malformed("<range> must be empty");

  req.query.table = required(select, "table");
  req.query.key_from = required_u64(range, "from");
  req.query.key_to = required_u64(range, "to");
  if (!is_valid_table_name(req.query.table)) malformed("invalid table name");
  if (req.query.key_from > req.query.key_to) malformed("range from > to");
  return req;
}

ResponseEnvelope decode_response(std::string_view doc) {
  static constexpr Status kStatuses[] = {Status::ok, Status::error};
  static constexpr Source kSources[] = {Source::cache, Source::store, Source::none};
  static constexpr ErrorCode kCodes[] = {ErrorCode::none, ErrorCode::cache_miss, ErrorCode::not_found,
                                         ErrorCode::unauthorized, ErrorCode::malformed};

  XmlElement root = detail::parse_xml(doc);
  if (root.name != "spim-response") malformed("unexpected root <" + root.name + ">");
  only_attributes(root, {"id", "status", "source", "code", "count"});

  ResponseEnvelope resp;
  resp.request_id = required(root, "id");
  resp.status = parse_enum(required(root, "status"), kStatuses, "status");
  resp.source = parse_enum(required(root, "source"), kSources, "source");
  resp.error_code = parse_enum(required(root, "code"), kCodes, "code");
  std::uint64_t count = required_u64(root, "count");

  const XmlElement& records = single_child(root, "records");
  if (!records.attributes.empty() || !blank(records.text)) malformed("<records> takes no attributes or text");
  resp.records.reserve(records.children.size());
  for (const auto& rec_el : records.children) {
    if (rec_el.name != "record") malformed("unexpected <" + rec_el.name + "> in <records>");
    only_attributes(rec_el, {"key"});
    if (!blank(rec_el.text)) malformed("unexpected text inside <record>");
    Record rec;
    rec.key = required_u64(rec_el, "key");
    rec.fields.reserve(rec_el.children.size());
    for (const auto& f : rec_el.children) {
      if (f.name != "f") malformed("unexpected <" + f.name + "> in <record>");
      only_attributes(f, {"n"});
      if (!f.children.empty()) malformed("<f> must contain text only");
      rec.fields.emplace_back(required(f, "n"), f.text);
    }
    resp.records.push_back(std::move(rec));
  }
  if (count != resp.records.size()) malformed("count attribute does not match record elements");
  if (!resp.valid()) malformed("response violates status/source/code invariants");
  return resp;
}

// ---------------------------------------------------------------------------

std::string frame(std::string_view doc) {
  if (doc.size() > 0xFFFFFFFFull) throw Error(Errc::oversize, "document exceeds 2^32-1 bytes");
  auto n = static_cast<std::uint32_t>(doc.size());
  std::string out;
  out.reserve(doc.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out.append(doc);
  return out;
}

namespace {

std::uint32_t read_be32(std::string_view s) {
  auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])); };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

}  // namespace

Deframed deframe(std::string_view stream, std::size_t max_len) {
  if (stream.size() < 4) throw Error(Errc::truncated, "stream ends inside the length prefix");
  std::uint32_t len = read_be32(stream);
  if (len > max_len) throw Error(Errc::oversize, "declared frame length " + std::to_string(len) + " exceeds maximum");
  if (stream.size() - 4 < len) throw Error(Errc::truncated, "stream ends inside the payload");
  return Deframed{std::string(stream.substr(4, len)), 4 + static_cast<std::size_t>(len)};
}

std::optional<std::string> StreamDeframer::next() {
  std::string_view pending(buffer_.data() + offset_, buffer_.size() - offset_);
  if (pending.size() < 4) return std::nullopt;
  std::uint32_t len = read_be32(pending);
  if (len > max_len_) throw Error(Errc::oversize, "declared frame length " + std::to_string(len) + " exceeds maximum");
  if (pending.size() - 4 < len) return std::nullopt;
  std::string payload(pending.substr(4, len));
  offset_ += 4 + len;
  if (offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  } else if (offset_ > (1u << 20) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(0, offset_);
    offset_ = 0;
  }
  return payload;
}

void StreamDeframer::finish() const {
  if (buffered() != 0) throw Error(Errc::truncated, "stream ended mid-frame");
}

}  // namespace spim
