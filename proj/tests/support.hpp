#pragma once

// Helpers shared by the test binaries: stores, temp dirs, random envelopes.

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unistd.h>

#include "spim/bench.hpp"
#include "spim/error.hpp"
#include "spim/storage.hpp"
#include "spim/wire.hpp"

namespace spim::test {

inline std::shared_ptr<DataStore> make_store(std::uint64_t n, const std::string& table = "records",
                                             std::uint64_t seed = 7) {
  auto store = std::make_shared<DataStore>();
  store->add_table(Table::from_csv(table, bench::generate_store(n, seed, 16)));
  return store;
}

// Runs fn and returns the spim::Errc it threw, or nullopt.
inline std::optional<Errc> errc_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "spim-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Text that exercises escaping: markup characters, quotes, whitespace, UTF-8.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len = 12) {
  static const std::string pieces[] = {"a", "Z", "0", "_", "&", "<", ">", "\"", "'", " ", "  ", "\t",
                                       "\n", "\\", "é", "漢", ";", "=", "|", "amp;"};
  std::size_t len = rng() % (max_len + 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out += pieces[rng() % std::size(pieces)];
  return out;
}

inline std::string random_name(std::mt19937_64& rng) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
  std::string out(1 + rng() % 10, 'x');
  for (auto& c : out) c = alphabet[rng() % (sizeof(alphabet) - 1)];
  return out;
}

inline Query random_query(std::mt19937_64& rng) {
  std::uint64_t a = rng() % 100000;
  std::uint64_t b = a + rng() % 1000;
  if (rng() % 20 == 0) b = ~std::uint64_t{0};
  return Query{random_name(rng), a, b};
}

inline RequestEnvelope random_request(std::mt19937_64& rng) {
  return RequestEnvelope{"R-" + random_text(rng), random_text(rng), random_text(rng), random_query(rng)};
}

inline ResponseEnvelope random_response(std::mt19937_64& rng) {
  if (rng() % 4 == 0) {
    static const ErrorCode codes[] = {ErrorCode::cache_miss, ErrorCode::not_found, ErrorCode::unauthorized,
                                      ErrorCode::malformed};
    return ResponseEnvelope::failure("R-" + random_text(rng), codes[rng() % 4]);
  }
  std::vector<Record> records;
  std::uint64_t key = rng() % 50;
  std::size_t n = rng() % 6;
  std::size_t nfields = rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    Record r{key, {}};
    key += 1 + rng() % 5;
    for (std::size_t f = 0; f < nfields; ++f) r.fields.emplace_back("f" + std::to_string(f), random_text(rng));
    records.push_back(std::move(r));
  }
  return ResponseEnvelope::success("R-" + random_text(rng), rng() % 2 ? Source::cache : Source::store,
                                   std::move(records));
}

// Brute-force LRU: a deque of (key, payload) with the most recent at the front.
class OracleLru {
 public:
  explicit OracleLru(std::size_t cap) : cap_(cap) {}
  std::optional<ResponseEnvelope> lookup(const std::string& key) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].first == key) {
        auto item = items_[i];
        items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(i));
        items_.push_front(item);
        return item.second;
      }
    }
    return std::nullopt;
  }
  void store(const std::string& key, ResponseEnvelope p) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].first == key) {
        items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    items_.emplace_front(key, std::move(p));
    if (items_.size() > cap_) items_.pop_back();
  }
  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : items_) out.push_back(k);
    return out;
  }

 private:
  std::size_t cap_;
  std::deque<std::pair<std::string, ResponseEnvelope>> items_;
};

}  // namespace spim::test
