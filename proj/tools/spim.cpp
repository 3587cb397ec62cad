// spim: command-line entry point for the server tier, the client tier, the
// mashup view, the benchmark harness and the fixture checks.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "spim/bench.hpp"
#include "spim/client.hpp"
#include "spim/dmvc.hpp"
#include "spim/error.hpp"
#include "spim/fixtures.hpp"
#include "spim/server.hpp"
#include "spim/views.hpp"

namespace {

constexpr const char* kVersion = "spim 1.0.0";

int runtime_failure(const std::string& what) {
  std::cerr << "spim: " << what << "\n";
  return 2;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw spim::Error(spim::Errc::io_error, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw spim::Error(spim::Errc::io_error, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Adds `delta` (key=value lines) onto the counters already stored at `path`.
void accumulate_stats(const std::filesystem::path& path, const std::string& delta) {
  std::map<std::string, std::uint64_t> totals;
  std::vector<std::string> order;
  auto absorb = [&](const std::string& text) {
    auto kv = spim::KeyValueConfig::parse(text);
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq);
      if (!totals.count(key)) order.push_back(key);
      totals[key] += kv.get_uint(key, 0);
    }
  };
  if (std::filesystem::exists(path)) absorb(read_text(path));
  absorb(delta);
  std::string out;
  for (const auto& key : order) out += key + "=" + std::to_string(totals[key]) + "\n";
  write_text_atomically(path, out);
}

std::string client_counter_lines(const spim::ClientCounters& c) {
  std::string out;
  out += "transactions=" + std::to_string(c.transactions) + "\n";
  out += "cm_cache_scans=" + std::to_string(c.model.cache_scans) + "\n";
  out += "cm_hits=" + std::to_string(c.model.hits) + "\n";
  out += "cm_misses=" + std::to_string(c.model.misses) + "\n";
  out += "cm_stores=" + std::to_string(c.model.stores) + "\n";
  out += "ds_reads_attempted_by_cm=" + std::to_string(c.model.ds_reads_attempted) + "\n";
  return out;
}

std::shared_ptr<spim::DataStore> load_store(const std::vector<std::filesystem::path>& paths) {
  auto store = std::make_shared<spim::DataStore>();
  for (const auto& p : paths) store->load_csv_file(p);
  return store;
}

// ---------------------------------------------------------------------------

int cmd_serve(const std::string& config_path, const std::string& ready_file) {
  auto cfg = spim::ServerConfig::from(spim::KeyValueConfig::from_file(config_path));

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // before any server thread exists

  auto server = spim::Server::start(cfg);
  std::cerr << "spim: serving " << server->address() << " mode=" << spim::to_string(cfg.mode) << "\n";
  if (!ready_file.empty()) write_text_atomically(ready_file, server->address() + "\n");

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "spim: shutting down\n";
  server->stop();
  std::cerr << spim::format_counters(server->counters());
  return 0;
}

int cmd_query(const std::string& config_path, const std::string& table, std::uint64_t from, std::uint64_t to,
              const std::string& render_kind, bool render_given, bool trace) {
  auto cfg = spim::ClientConfig::from(spim::KeyValueConfig::from_file(config_path));
  spim::RenderKind kind = spim::parse_render_kind(render_kind);
  spim::Query q{table, from, to};
  if (!q.valid()) {
    std::cerr << "spim: invalid query (table must match [A-Za-z0-9_]+ and from <= to)\n";
    return 1;
  }
  std::optional<spim::CostMeter> meter;
  if (cfg.cost_model) meter.emplace(*cfg.cost_model);
  spim::CostMeter* meter_ptr = meter ? &*meter : nullptr;
  auto transport = std::make_unique<spim::TcpTransport>(spim::net::parse_host_port(cfg.server_address), meter_ptr);

  spim::ResponseEnvelope response;
  std::vector<std::string> trace_lines;
  std::string stats_delta;
  if (cfg.mode == spim::Mode::spim) {
    spim::ClientController client(cfg.options, std::move(transport), meter_ptr);
    if (cfg.cache_path) client.attach_cache_file(*cfg.cache_path);
    spim::Transaction tx = client.request(q);
    for (auto step : tx.trace.steps) trace_lines.emplace_back(spim::to_string(step));
    if (tx.response.ok()) client.persist_cache();
    response = std::move(tx.response);
    stats_delta = client_counter_lines(client.counters());
  } else {
    std::unique_ptr<spim::StoreView> view;
    if (cfg.replica_store_server) {
      view = std::make_unique<spim::RemoteStoreView>(
          std::make_unique<spim::TcpTransport>(spim::net::parse_host_port(*cfg.replica_store_server)),
          cfg.options.client_id, cfg.options.token);
    } else {
      view = std::make_unique<spim::LocalStoreView>(load_store(cfg.replica_store_paths));
    }
    spim::DmvcController client(cfg.options, std::move(transport), std::move(view), meter_ptr);
    spim::DmvcTransaction tx = client.request(q);
    response = std::move(tx.response);
    stats_delta = spim::format_counters(client.counters());
  }
  if (cfg.stats_path) accumulate_stats(*cfg.stats_path, stats_delta);
  if (meter) std::cerr << "spim: cost_units=" << meter->total() << "\n";

  if (!response.ok()) {
    if (trace) {
      for (const auto& s : trace_lines) std::cerr << s << "\n";
    }
    return runtime_failure("query failed: " + std::string(spim::to_string(response.error_code)));
  }
  std::string view = (!trace || render_given) ? spim::render(response, kind) : std::string{};
  if (trace) {
    for (const auto& s : trace_lines) std::cout << s << "\n";
  }
  std::cout << view;
  return 0;
}

int cmd_mashup(const std::string& config_path, std::optional<std::string> render_override) {
  auto kv = spim::KeyValueConfig::from_file(config_path);
  kv.require_known({"client_id", "token", "capacity", "render", "part"});
  spim::ClientOptions options;
  options.client_id = kv.get_or("client_id", "mashup");
  options.token = kv.get_or("token", "");
  options.cache_capacity = kv.get_uint("capacity", options.cache_capacity);
  spim::RenderKind kind = spim::parse_render_kind(render_override.value_or(kv.get_or("render", "text")));

  std::map<std::string, std::unique_ptr<spim::ClientController>> clients;  // one handle per server
  std::vector<spim::ComposePart> parts;
  for (const auto& spec : kv.get_all("part")) {
    auto cells = spim::split_list(spec);
    if (cells.size() != 5) {
      throw spim::Error(spim::Errc::config_error, "part must be label,host:port,table,from,to: '" + spec + "'");
    }
    spim::KeyValueConfig bounds;
    bounds.set("from", cells[3]);
    bounds.set("to", cells[4]);
    spim::Query q{cells[2], bounds.get_uint("from", 0), bounds.get_uint("to", 0)};
    auto& client = clients[cells[1]];
    if (!client) {
      client = std::make_unique<spim::ClientController>(
          options, std::make_unique<spim::TcpTransport>(spim::net::parse_host_port(cells[1])));
    }
    spim::Transaction tx = client->request(q);
    if (!tx.response.ok()) {
      return runtime_failure("part '" + cells[0] + "' failed: " + std::string(spim::to_string(tx.response.error_code)));
    }
    parts.push_back(spim::ComposePart{cells[0], std::move(tx.response)});
  }
  if (parts.empty()) throw spim::Error(spim::Errc::config_error, "mashup config lists no part= entries");
  std::cout << spim::render(spim::compose(parts), kind);
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& outdir) {
  spim::bench::BenchConfig cfg;
  if (!config_path.empty()) cfg = spim::bench::BenchConfig::from(spim::KeyValueConfig::from_file(config_path));
  if (!outdir.empty()) cfg.outdir = outdir;
  auto reports = spim::bench::run_suite(cfg);
  spim::bench::write_reports(reports, cfg.outdir);
  for (const auto& r : reports) {
    std::cerr << "spim: " << spim::bench::to_string(r.bench_case)
              << " average_decrease=" << spim::bench::format_2dp(r.average_decrease)
              << " sigma_dmvc=" << spim::bench::format_2dp(r.sigma_t1)
              << " sigma_spim=" << spim::bench::format_2dp(r.sigma_t2) << "\n";
  }
  std::cerr << "spim: wrote table1.csv, table2.csv, plotdata.tsv to " << cfg.outdir.string() << "\n";
  return 0;
}

int cmd_stats(const std::string& config_path) {
  auto kv = spim::KeyValueConfig::from_file(config_path);
  auto stats = kv.get("stats");
  std::filesystem::path path = stats ? kv.resolve(*stats) : kv.resolve("spim-server.stats");
  if (!std::filesystem::exists(path)) return runtime_failure("no stats file at " + path.string());
  std::cout << read_text(path);
  return 0;
}

int cmd_verify_fixtures(const std::string& dir) {
  std::string t1 = dir.empty() ? std::string(spim::fixtures::builtin_table1()) : read_text(std::filesystem::path(dir) / "table1.csv");
  std::string t2 = dir.empty() ? std::string(spim::fixtures::builtin_table2()) : read_text(std::filesystem::path(dir) / "table2.csv");
  bool all = true;
  for (const auto& check : spim::fixtures::verify(t1, t2)) {
    const char* tag = check.informational ? "INFO" : (check.pass ? "PASS" : "FAIL");
    std::cout << tag << " " << check.name << ": " << check.detail << "\n";
    all = all && (check.informational || check.pass);
  }
  return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partitioned MVC client/server tiers, dmvc baseline and benchmark harness", "spim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config;
  std::string ready_file;
  auto* serve = app.add_subcommand("serve", "Run the server tier");
  serve->add_option("--config", config, "Server config (key=value)")->required();
  serve->add_option("--ready-file", ready_file, "Write the bound address here once listening");

  std::string table = "records";
  std::uint64_t from = 1;
  std::uint64_t to = 1;
  std::string render_kind = "text";
  bool trace = false;
  auto* query = app.add_subcommand("query", "Run one transaction through the client tier");
  query->add_option("--config", config, "Client config (key=value)")->required();
  query->add_option("--table", table, "Table name");
  query->add_option("--from", from, "First key (inclusive)")->required();
  query->add_option("--to", to, "Last key (inclusive)")->required();
  auto* render_opt = query->add_option("--render", render_kind, "text, html or json");
  query->add_flag("--trace", trace, "Print the step trace, one step id per line");

  std::string mashup_render;
  auto* mashup = app.add_subcommand("mashup", "Compose several services into one view");
  mashup->add_option("--config", config, "Mashup config (key=value)")->required();
  auto* mashup_render_opt = mashup->add_option("--render", mashup_render, "text, html or json");

  std::string outdir;
  auto* bench = app.add_subcommand("bench", "Run the dmvc vs SPIM benchmark sweep");
  bench->add_option("--config", config, "Bench config (key=value); defaults when omitted");
  bench->add_option("--out,--outdir", outdir, "Output directory (overrides outdir=)");

  auto* stats = app.add_subcommand("stats", "Print the counters file named by a config's stats= key");
  stats->add_option("--config", config, "Server or client config")->required();

  std::string fixtures_dir;
  auto* verify = app.add_subcommand("verify-fixtures", "Recompute decrease % and sigma over the shipped fixtures");
  verify->add_option("--fixtures", fixtures_dir, "Directory holding table1.csv and table2.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e, std::cerr, std::cerr);
    return 1;
  }

  try {
    if (serve->parsed()) return cmd_serve(config, ready_file);
    if (query->parsed()) return cmd_query(config, table, from, to, render_kind, render_opt->count() > 0, trace);
    if (mashup->parsed()) {
      return cmd_mashup(config, mashup_render_opt->count() > 0 ? std::optional(mashup_render) : std::nullopt);
    }
    if (bench->parsed()) return cmd_bench(config, outdir);
    if (stats->parsed()) return cmd_stats(config);
    if (verify->parsed()) return cmd_verify_fixtures(fixtures_dir);
  } catch (const spim::Error& e) {
    return runtime_failure(e.what());
  } catch (const std::exception& e) {
    return runtime_failure(e.what());
  }
  return 1;
}
