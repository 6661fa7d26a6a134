// ptsim command-line front end. Exit codes: 0 success, 2 input error,
// 1 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "ptsim/http_service.hpp"
#include "ptsim/ptsim.hpp"

namespace {

using namespace ptsim;

struct LogOptions {
  ColumnMapping mapping;
  std::string timestamp_format;
};

void add_log_options(CLI::App* cmd, LogOptions& o) {
  cmd->add_option("--case-column", o.mapping.case_id, "case id column name")->capture_default_str();
  cmd->add_option("--activity-column", o.mapping.activity, "activity column name")->capture_default_str();
  cmd->add_option("--resource-column", o.mapping.resource, "resource column name")->capture_default_str();
  cmd->add_option("--timestamp-column", o.mapping.timestamp, "timestamp column name")->capture_default_str();
  cmd->add_option("--timestamp-format", o.timestamp_format, "strftime-style format; ISO-8601 when empty");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

EventLog read_log(const std::string& path, const LogOptions& o) {
  return ingest_csv_text(read_file(path), o.mapping, o.timestamp_format);
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("MalformedJson", path + ": " + e.what());
  }
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("FileNotWritable", "cannot write '" + path + "'");
  out << content;
}

// The tree argument is either a file holding notation or the notation itself.
ProcessTree load_tree(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) return parse_tree(read_file(arg));
  return parse_tree(arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process-tree discovery, simulation and log comparison"};
  app.require_subcommand(1);

  LogOptions log_opts;
  std::string out;

  auto* discover_cmd = app.add_subcommand("discover", "discover a process tree from an event log CSV");
  std::string log_path;
  discover_cmd->add_option("log", log_path, "event log CSV")->required();
  discover_cmd->add_option("-o,--out", out, "output file (default stdout)");
  add_log_options(discover_cmd, log_opts);

  auto* enrich_cmd = app.add_subcommand("enrich", "estimate simulation parameters for a tree from a log");
  std::string tree_arg;
  enrich_cmd->add_option("log", log_path, "event log CSV")->required();
  enrich_cmd->add_option("--tree", tree_arg, "tree notation or file (discovered when omitted)");
  enrich_cmd->add_option("-o,--out", out, "model JSON output (default stdout)");
  add_log_options(enrich_cmd, log_opts);

  auto* simulate_cmd = app.add_subcommand("simulate", "simulate an enriched model to an event log CSV");
  std::string model_path, patch_path, start;
  std::optional<std::uint64_t> cases, seed;
  std::optional<int> capacity;
  simulate_cmd->add_option("--model", model_path, "model JSON")->required();
  simulate_cmd->add_option("--cases", cases, "number of cases");
  simulate_cmd->add_option("--seed", seed, "random seed");
  simulate_cmd->add_option("--start", start, "start time (ISO-8601)");
  simulate_cmd->add_option("--capacity", capacity, "process capacity (concurrent cases)");
  simulate_cmd->add_option("--patch", patch_path, "parameter patch JSON applied before simulating");
  simulate_cmd->add_option("-o,--out", out, "log CSV output (default stdout)");

  auto* compare_cmd = app.add_subcommand("compare", "behavior fractions and EMD between two logs");
  std::string original_path, simulated_path;
  compare_cmd->add_option("original", original_path, "original log CSV")->required();
  compare_cmd->add_option("simulated", simulated_path, "simulated log CSV")->required();
  compare_cmd->add_option("-o,--out", out, "JSON output (default stdout)");
  add_log_options(compare_cmd, log_opts);

  auto* spectrum_cmd = app.add_subcommand("spectrum", "performance spectrum diff between two logs");
  std::optional<double> tolerance;
  spectrum_cmd->add_option("original", original_path, "original log CSV")->required();
  spectrum_cmd->add_option("simulated", simulated_path, "simulated log CSV")->required();
  spectrum_cmd->add_option("--tolerance", tolerance, "seconds (default 5% of the original average, at least 1 s)")
      ->check(CLI::NonNegativeNumber);
  spectrum_cmd->add_option("-o,--out", out, "JSON output (default stdout)");
  add_log_options(spectrum_cmd, log_opts);

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP/JSON service");
  int port = 8080;
  std::string host = "0.0.0.0", snapshot_dir;
  serve_cmd->add_option("--port", port, "listen port")->envname("PORT")->capture_default_str();
  serve_cmd->add_option("--host", host, "listen address")->capture_default_str();
  serve_cmd->add_option("--snapshot-dir", snapshot_dir, "directory for on-demand session snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*discover_cmd) {
      emit(out, serialize(discover(read_log(log_path, log_opts))) + "\n");
    } else if (*enrich_cmd) {
      const auto log = read_log(log_path, log_opts);
      const auto tree = tree_arg.empty() ? discover(log) : load_tree(tree_arg);
      emit(out, to_json(enrich(tree, log)).dump(2) + "\n");
    } else if (*simulate_cmd) {
      auto model = model_from_json(read_json(model_path));
      if (!patch_path.empty()) model = apply_patch(model, patch_from_json(read_json(patch_path)));
      auto config = default_config(model);
      if (cases) config.number_of_cases = *cases;
      if (seed) config.seed = *seed;
      if (capacity) config.process_capacity = *capacity;
      if (!start.empty()) {
        auto t = parse_iso8601(start);
        if (!t) throw Error("BadTimestamp", "--start '" + start + "'");
        config.start_time = *t;
      }
      emit(out, to_csv(simulate(model, config)));
    } else if (*compare_cmd) {
      const auto result = compare_logs(read_log(original_path, log_opts), read_log(simulated_path, log_opts));
      emit(out, to_json(result).dump(2) + "\n");
    } else if (*spectrum_cmd) {
      const auto records = spectrum_diff(read_log(original_path, log_opts), read_log(simulated_path, log_opts), tolerance);
      emit(out, to_json(records).dump(2) + "\n");
    } else if (*serve_cmd) {
      Service service(snapshot_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(snapshot_dir));
      httplib::Server server;
      mount(server, service);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) throw Error("ListenFailed", "cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
