#pragma once

// Benchmark harness: cache-hit and store-fetch workloads against both
// architectures over a sweep of store sizes, reported as dmvc (t1) vs
// SPIM (t2) time, decrease %, averages and standard deviations.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spim/config.hpp"
#include "spim/cost.hpp"
#include "spim/server.hpp"
#include "spim/storage.hpp"

namespace spim::bench {

enum class Case { cache_fetch, store_fetch };

std::string_view to_string(Case c) noexcept;

struct TimingRow {
  std::uint64_t records = 0;
  std::optional<double> t1;  // dmvc
  std::optional<double> t2;  // SPIM
  std::optional<double> decrease_pct;
};

struct BenchReport {
  Case bench_case = Case::cache_fetch;
  std::vector<TimingRow> rows;
  std::optional<double> average_decrease;
  std::optional<double> sigma_t1;
  std::optional<double> sigma_t2;
};

/// Fills decrease_pct from t1/t2 and computes the summary fields.
BenchReport summarize(Case c, std::vector<TimingRow> rows);

struct BenchConfig {
  std::uint64_t first = 1000;
  std::uint64_t last = 30000;
  std::uint64_t step = 1000;
  bool run_spim = true;
  bool run_dmvc = true;
  CostModel cost{1.0, 0.0, true};
  std::uint64_t seed = 7;
  std::size_t payload_bytes = 64;
  std::size_t cache_capacity = DataCache::kDefaultCapacity;
  unsigned repeats = 3;  // wall-clock mode keeps the fastest
  std::filesystem::path outdir = ".";

  /// Keys: range (`from..to`), step, modes, cost_model, scan_cost, rtt_cost,
  /// seed, payload, capacity, repeats, outdir.
  static BenchConfig from(const KeyValueConfig& kv);
};

/// Deterministic CSV store: header `key,payload`, keys 1..n, payload of
/// `payload_bytes` alphanumerics drawn from a seeded generator.
std::string generate_store(std::uint64_t n, std::uint64_t seed, std::size_t payload_bytes = 64);

/// Time for fetching (1, n) once: abstract units under an enabled cost model,
/// otherwise wall-clock milliseconds over loopback TCP. cache_fetch primes the
/// cache first; store_fetch runs cold. Throws Errc::contract_violation if the
/// measured fetch did not take the intended path or the cost log disagrees
/// with the running total.
double run_case(Case c, Mode mode, std::shared_ptr<const DataStore> store, std::uint64_t n, const BenchConfig& cfg);

/// Runs the sweep; returns one report per case (cache_fetch, store_fetch).
std::vector<BenchReport> run_suite(const BenchConfig& cfg);

std::string table1_csv(const std::vector<BenchReport>& reports);
std::string table2_csv(const std::vector<BenchReport>& reports);
std::string plotdata_tsv(const std::vector<BenchReport>& reports);

/// Writes table1.csv, table2.csv and plotdata.tsv into `outdir`.
void write_reports(const std::vector<BenchReport>& reports, const std::filesystem::path& outdir);

/// Formats a number the way the reports do: blank for nullopt, two decimals.
std::string format_2dp(std::optional<double> v);

}  // namespace spim::bench
