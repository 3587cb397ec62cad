#include "spim/fixtures.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iterator>

#include "spim/error.hpp"
#include "spim/stats.hpp"

namespace spim::fixtures {

namespace {

std::vector<std::vector<std::string>> csv_rows(std::string_view csv, std::size_t columns, std::string_view header) {
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  while (!csv.empty()) {
    auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (first) {
      if (line != header) throw Error(Errc::malformed, "expected header '" + std::string(header) + "'");
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != columns) throw Error(Errc::malformed, "wrong cell count in '" + std::string(line) + "'");
    rows.push_back(std::move(cells));
  }
  if (first) throw Error(Errc::malformed, "empty fixture");
  return rows;
}

double number(const std::string& cell) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::malformed, "not a number: '" + cell + "'");
  }
}

bench::Case parse_case(const std::string& cell) {
  if (cell == "cache_fetch") return bench::Case::cache_fetch;
  if (cell == "store_fetch") return bench::Case::store_fetch;
  throw Error(Errc::malformed, "unknown case '" + cell + "'");
}

}  // namespace

std::vector<bench::BenchReport> parse_table1(std::string_view csv) {
  std::vector<bench::BenchReport> reports;
  for (const auto& cells : csv_rows(csv, 5, "case,records,t1,t2,decrease_pct")) {
    bench::Case c = parse_case(cells[0]);
    auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.bench_case == c; });
    if (it == reports.end()) {
      reports.push_back(bench::BenchReport{c, {}, {}, {}, {}});
      it = std::prev(reports.end());
    }
    bench::TimingRow row;
    row.records = static_cast<std::uint64_t>(number(cells[1]));
    if (!cells[2].empty()) row.t1 = number(cells[2]);
    if (!cells[3].empty()) row.t2 = number(cells[3]);
    if (!cells[4].empty()) row.decrease_pct = number(cells[4]);
    it->rows.push_back(row);
  }
  return reports;
}

std::vector<SigmaRow> parse_table2(std::string_view csv) {
  std::vector<SigmaRow> rows;
  for (const auto& cells : csv_rows(csv, 3, "case,arch,sigma")) {
    if (cells[1] != "dmvc" && cells[1] != "spim") throw Error(Errc::malformed, "unknown arch '" + cells[1] + "'");
    rows.push_back(SigmaRow{parse_case(cells[0]), cells[1], number(cells[2])});
  }
  return rows;
}

std::vector<Check> verify(std::string_view table1_csv, std::string_view table2_csv) {
  std::vector<Check> checks;
  auto table1 = parse_table1(table1_csv);
  auto table2 = parse_table2(table2_csv);

  for (const auto& report : table1) {
    std::size_t compared = 0;
    std::size_t matched = 0;
    std::string first_miss;
    std::vector<double> abs_decreases;
    for (const auto& row : report.rows) {
      if (!row.t1 || !row.t2) continue;
      auto recomputed = stats::decrease_pct(*row.t1, *row.t2);
      if (recomputed) abs_decreases.push_back(std::abs(*recomputed));
      if (!row.decrease_pct) continue;  // blank cell in the published table
      ++compared;
      double mine = recomputed ? stats::round_half_up(std::abs(*recomputed), 2) : 0.0;
      if (recomputed && std::abs(mine - *row.decrease_pct) <= kDecreaseTolerance + 1e-9) {
        ++matched;
      } else if (first_miss.empty()) {
        first_miss = fmt::format("; first mismatch at {} records: {:.2f} vs {:.2f}", row.records, mine,
                                 *row.decrease_pct);
      }
    }
    checks.push_back(Check{fmt::format("decrease_pct {}", bench::to_string(report.bench_case)),
                           compared > 0 && matched == compared,
                           fmt::format("{}/{} non-blank cells within ±{:.2f}{}", matched, compared,
                                       kDecreaseTolerance, first_miss),
                           false});
    if (!abs_decreases.empty()) {
      checks.push_back(Check{fmt::format("average |decrease_pct| {}", bench::to_string(report.bench_case)), true,
                             fmt::format("{:.2f} over {} rows", stats::mean(abs_decreases), abs_decreases.size()),
                             true});
    }
  }

  for (const auto& expected : table2) {
    auto report = std::find_if(table1.begin(), table1.end(),
                               [&](const auto& r) { return r.bench_case == expected.bench_case; });
    std::string name = fmt::format("sigma {} {}", bench::to_string(expected.bench_case), expected.arch);
    if (report == table1.end()) {
      checks.push_back(Check{name, false, "no timing rows for this case", false});
      continue;
    }
    std::vector<double> column;
    for (const auto& row : report->rows) {
      auto v = expected.arch == "dmvc" ? row.t1 : row.t2;
      if (v) column.push_back(*v);
    }
    auto sigma = stats::sigma(column);
    bool pass = sigma && std::abs(*sigma - expected.sigma) <= kSigmaTolerance;
    checks.push_back(Check{name, pass,
                           sigma ? fmt::format("{:.2f} vs {:.2f} (±{})", *sigma, expected.sigma, kSigmaTolerance)
                                 : std::string("fewer than two samples"),
                           false});
  }
  return checks;
}

}  // namespace spim::fixtures
