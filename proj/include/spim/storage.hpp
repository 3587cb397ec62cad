#pragma once

// Data Store (server-side source of truth) and Data Cache (client-side store
// of recently used query results), with their file formats.
//
// DS bulk-load format: CSV, header `key,<field>,...`, keys strictly ascending,
// no quoting. DC persistence format: one entry per line, most recently used
// first:
//
//   table:from:to|stored_at|last_used|base64(response XML)\n

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spim/wire.hpp"

namespace spim {

class Table {
 public:
  Table(std::string name, std::vector<std::string> field_names);

  /// Throws Errc::contract_violation unless `rec.key` exceeds the last key
  /// and its field names match the table's.
  void append(Record rec);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& field_names() const noexcept { return field_names_; }
  std::size_t size() const noexcept { return rows_.size(); }
  std::span<const std::uint64_t> keys() const noexcept { return keys_; }
  std::span<const Record> rows() const noexcept { return rows_; }

  /// Parses the CSV bulk-load format. Throws Errc::malformed.
  static Table from_csv(std::string name, std::string_view csv);

 private:
  std::string name_;
  std::vector<std::string> field_names_;
  std::vector<std::uint64_t> keys_;  // mirrors rows_[i].key for the scan kernel
  std::vector<Record> rows_;
};

struct ScanResult {
  std::vector<Record> records;
  std::size_t records_scanned = 0;
};

class DataStore {
 public:
  void add_table(Table table);
  const Table* table(std::string_view name) const noexcept;
  std::vector<std::string> table_names() const;

  /// Loads `path` as a table named after the file stem.
  void load_csv_file(const std::filesystem::path& path);

 private:
  std::map<std::string, Table, std::less<>> tables_;
};

/// Linear pass over the whole table; records_scanned is always the table size.
/// Throws Errc::not_found for a missing table or an empty match.
ScanResult ds_scan(const DataStore& store, const Query& q);

struct CacheEntry {
  std::string query_key;
  std::uint64_t stored_at = 0;
  std::uint64_t last_used = 0;
  ResponseEnvelope payload;

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

struct CacheLookup {
  std::optional<ResponseEnvelope> payload;  // nullopt is CACHE_MISS
  std::size_t entries_scanned = 0;

  bool hit() const noexcept { return payload.has_value(); }
};

/// Fixed-capacity LRU cache of query results. Not synchronized; owners
/// serialize access (lookups mutate recency).
class DataCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 64;

  explicit DataCache(std::size_t capacity = kDefaultCapacity);

  /// Linear scan from most to least recently used. A hit refreshes recency
  /// and returns the payload with source=cache.
  CacheLookup lookup(const Query& q);

  /// Inserts or replaces; evicts the least recently used entry when full.
  /// Throws Errc::contract_violation for a non-OK payload.
  void store(const Query& q, ResponseEnvelope payload);

  /// Membership without touching recency or counters.
  bool contains(const Query& q) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t hits() const noexcept { return hits_; }
  std::uint64_t misses() const noexcept { return misses_; }

  /// Most recently used first.
  const std::list<CacheEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> keys_by_recency() const;

  std::string serialize() const;
  /// Throws Errc::malformed_cache_file. Keeps at most `capacity` entries
  /// (the most recent ones); counters start at zero.
  static DataCache parse(std::string_view text, std::size_t capacity = kDefaultCapacity);

  void save(const std::filesystem::path& path) const;
  /// A missing file loads as an empty cache.
  static DataCache load(const std::filesystem::path& path, std::size_t capacity = kDefaultCapacity);

 private:
  std::size_t capacity_;
  std::list<CacheEntry> entries_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace spim
