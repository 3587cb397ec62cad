#include "spim/storage.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "spim/detail/base64.hpp"
#include "spim/error.hpp"
#include "spim/kernels.hpp"

namespace spim {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<std::uint64_t> to_u64(std::string_view s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Iterates lines, tolerating a final line without '\n' and stripping '\r'.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Data Store

Table::Table(std::string name, std::vector<std::string> field_names)
    : name_(std::move(name)), field_names_(std::move(field_names)) {
  if (!is_valid_table_name(name_)) throw Error(Errc::contract_violation, "invalid table name '" + name_ + "'");
}

void Table::append(Record rec) {
  if (!keys_.empty() && rec.key <= keys_.back()) {
    throw Error(Errc::contract_violation, "keys must be strictly increasing in table " + name_);
  }
  if (rec.fields.size() != field_names_.size()) {
    throw Error(Errc::contract_violation, "field count mismatch in table " + name_);
  }
  for (std::size_t i = 0; i < field_names_.size(); ++i) {
    if (rec.fields[i].first != field_names_[i]) {
      throw Error(Errc::contract_violation, "field name mismatch in table " + name_);
    }
  }
  keys_.push_back(rec.key);
  rows_.push_back(std::move(rec));
}

Table Table::from_csv(std::string name, std::string_view csv) {
  if (!is_valid_table_name(name)) throw Error(Errc::malformed, "invalid table name '" + name + "'");
  std::optional<Table> table;
  for_each_line(csv, [&](std::size_t line_no, std::string_view line) {
    auto where = [&] { return name + " line " + std::to_string(line_no); };
    if (!table) {
      auto header = split(line, ',');
      if (header.empty() || header.front() != "key") throw Error(Errc::malformed, where() + ": header must start with 'key'");
      std::vector<std::string> fields(header.begin() + 1, header.end());
      for (const auto& f : fields) {
        if (f.empty()) throw Error(Errc::malformed, where() + ": empty field name");
      }
      table.emplace(name, std::move(fields));
      return;
    }
    if (line.empty()) return;
    auto cells = split(line, ',');
    if (cells.size() != table->field_names().size() + 1) throw Error(Errc::malformed, where() + ": wrong cell count");
    auto key = to_u64(cells.front());
    if (!key) throw Error(Errc::malformed, where() + ": key is not an unsigned integer");
    if (!table->keys().empty() && *key <= table->keys().back()) {
      throw Error(Errc::malformed, where() + ": keys must be strictly ascending");
    }
    Record rec{*key, {}};
    rec.fields.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      rec.fields.emplace_back(table->field_names()[i - 1], std::string(cells[i]));
    }
    table->append(std::move(rec));
  });
  if (!table) throw Error(Errc::malformed, name + ": missing CSV header");
  return std::move(*table);
}

void DataStore::add_table(Table table) {
  std::string name = table.name();
  tables_.insert_or_assign(std::move(name), std::move(table));
}

const Table* DataStore::table(std::string_view name) const noexcept {
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : &it->second;
}

std::vector<std::string> DataStore::table_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : tables_) names.push_back(name);
  return names;
}

void DataStore::load_csv_file(const std::filesystem::path& path) {
  add_table(Table::from_csv(path.stem().string(), read_file(path)));
}

ScanResult ds_scan(const DataStore& store, const Query& q) {
  const Table* table = store.table(q.table);
  if (table == nullptr) throw Error(Errc::not_found, "no table '" + q.table + "'");
  kernels::KeyRange hit = kernels::scan_key_range(table->keys(), q.key_from, q.key_to);
  if (hit.count == 0) throw Error(Errc::not_found, "no records in " + q.canonical_key());
  auto rows = table->rows().subspan(hit.first, hit.count);
  return ScanResult{std::vector<Record>(rows.begin(), rows.end()), table->size()};
}

// ---------------------------------------------------------------------------
// Data Cache

DataCache::DataCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(Errc::contract_violation, "cache capacity must be at least 1");
}

CacheLookup DataCache::lookup(const Query& q) {
  const std::string key = q.canonical_key();
  std::size_t scanned = 0;
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    ++scanned;
    if (it->query_key == key) {
      it->last_used = ++clock_;
      entries_.splice(entries_.begin(), entries_, it);
      ++hits_;
      ResponseEnvelope out = entries_.front().payload;
      out.source = Source::cache;
      return CacheLookup{std::move(out), scanned};
    }
  }
  ++misses_;
  return CacheLookup{std::nullopt, scanned};
}

void DataCache::store(const Query& q, ResponseEnvelope payload) {
  if (!payload.ok()) throw Error(Errc::contract_violation, "only OK responses may be cached");
  std::string key = q.canonical_key();
  auto existing = std::find_if(entries_.begin(), entries_.end(), [&](const CacheEntry& e) { return e.query_key == key; });
  if (existing != entries_.end()) {
    entries_.erase(existing);
  } else if (entries_.size() >= capacity_) {
    entries_.pop_back();
  }
  std::uint64_t now = ++clock_;
  entries_.push_front(CacheEntry{std::move(key), now, now, std::move(payload)});
}

bool DataCache::contains(const Query& q) const {
  std::string key = q.canonical_key();
  return std::any_of(entries_.begin(), entries_.end(), [&](const CacheEntry& e) { return e.query_key == key; });
}

std::vector<std::string> DataCache::keys_by_recency() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& e : entries_) keys.push_back(e.query_key);
  return keys;
}

std::string DataCache::serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.query_key;
    out += '|';
    out += std::to_string(e.stored_at);
    out += '|';
    out += std::to_string(e.last_used);
    out += '|';
    out += detail::base64_encode(encode_response(e.payload));
    out += '\n';
  }
  return out;
}

DataCache DataCache::parse(std::string_view text, std::size_t capacity) {
  DataCache cache(capacity);
  std::unordered_set<std::string> seen;
  std::optional<std::uint64_t> previous_use;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto bad = [&](const std::string& why) {
      throw Error(Errc::malformed_cache_file, "line " + std::to_string(line_no) + ": " + why);
    };
    auto cells = split(line, '|');
    if (cells.size() != 4) bad("expected 4 fields");
    auto query = Query::from_canonical_key(cells[0]);
    if (!query) bad("bad query key");
    auto stored_at = to_u64(cells[1]);
    auto last_used = to_u64(cells[2]);
    if (!stored_at || !last_used) bad("bad timestamp");
    if (*last_used < *stored_at) bad("last_used precedes stored_at");
    if (previous_use && *last_used >= *previous_use) bad("entries out of recency order");
    previous_use = *last_used;
    auto xml = detail::base64_decode(cells[3]);
    if (!xml) bad("bad base64 payload");
    ResponseEnvelope payload;
    try {
      payload = decode_response(*xml);
    } catch (const Error& e) {
      bad(std::string("payload: ") + e.what());
    }
    if (!payload.ok()) bad("cached payload is not OK");
    std::string key = query->canonical_key();
    if (key != cells[0]) bad("query key is not canonical");
    if (!seen.insert(key).second) bad("duplicate query key");
    if (cache.entries_.size() < capacity) {
      cache.entries_.push_back(CacheEntry{std::move(key), *stored_at, *last_used, std::move(payload)});
    }
    cache.clock_ = std::max(cache.clock_, *last_used);
  });
  return cache;
}

void DataCache::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
    out << serialize();
    if (!out.flush()) throw Error(Errc::io_error, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io_error, "cannot replace " + path.string() + ": " + ec.message());
}

DataCache DataCache::load(const std::filesystem::path& path, std::size_t capacity) {
  if (!std::filesystem::exists(path)) return DataCache(capacity);
  return parse(read_file(path), capacity);
}

}  // namespace spim
