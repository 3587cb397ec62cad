#pragma once

// Published measurements shipped with the project (dmvc vs SPIM timings and
// their standard deviations), and the oracle checks run against them.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spim/bench.hpp"

namespace spim::fixtures {

/// Built-in copies of table1.csv / table2.csv.
std::string_view builtin_table1();
std::string_view builtin_table2();

/// table1.csv: `case,records,t1,t2,decrease_pct`; blank decrease cells are
/// kept as nullopt. Throws Errc::malformed.
std::vector<bench::BenchReport> parse_table1(std::string_view csv);

struct SigmaRow {
  bench::Case bench_case;
  std::string arch;  // "dmvc" or "spim"
  double sigma;
};

/// table2.csv: `case,arch,sigma`. Throws Errc::malformed.
std::vector<SigmaRow> parse_table2(std::string_view csv);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
  bool informational = false;  // reported, never fails the run
};

inline constexpr double kSigmaTolerance = 0.5;
inline constexpr double kDecreaseTolerance = 0.01;

/// Recomputes every non-blank decrease cell (as |value|) and the four
/// standard deviations, comparing against the fixtures.
std::vector<Check> verify(std::string_view table1_csv, std::string_view table2_csv);

}  // namespace spim::fixtures
