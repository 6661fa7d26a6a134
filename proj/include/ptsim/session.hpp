#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptsim/comparison.hpp"
#include "ptsim/discovery.hpp"
#include "ptsim/enrichment.hpp"
#include "ptsim/model_json.hpp"
#include "ptsim/simulator.hpp"
#include "ptsim/spectrum.hpp"

namespace ptsim {

// Transport-independent request/response pair; http_service.hpp adapts these
// to cpp-httplib.
struct Request {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  json as_json() const { return json::parse(body); }
};

inline constexpr const char* kRevisionHeader = "X-Model-Revision";
inline constexpr std::size_t kReportEffortRows = 10;

struct Scenario {
  json patches;  // patches applied since the previous scenario
  json config;
  json model;
  EventLog log;
  std::vector<SpectrumDiffRecord> spectrum;
  // Serialized once at creation; reads return these bytes unchanged.
  std::string comparison_body;
  std::string spectrum_body;
  std::string report_body;
};

struct Session {
  std::string id;
  EventLog original_log;
  EnrichedTree model;
  std::uint64_t revision = 1;
  json pending_patches = json::array();
  std::vector<std::shared_ptr<const Scenario>> scenarios;
  mutable std::shared_mutex mutex;
};

namespace detail {

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, std::string kind, const std::string& message)
      : std::runtime_error(message), status(status), kind(std::move(kind)) {}
  int status;
  std::string kind;
};

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

inline json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error("MalformedJson", e.what());
  }
}

inline SimulationConfig config_from_json(const EnrichedTree& model, const json& j) {
  return wrap_json([&] {
    auto c = default_config(model);
    if (j.contains("number_of_cases")) c.number_of_cases = j["number_of_cases"].get<std::uint64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("start_time")) c.start_time = json_time(j["start_time"]);
    if (j.contains("process_capacity") && !j["process_capacity"].is_null())
      c.process_capacity = j["process_capacity"].get<int>();
    return c;
  });
}

inline json config_to_json(const SimulationConfig& c) {
  return {{"number_of_cases", c.number_of_cases},
          {"seed", c.seed},
          {"start_time", format_iso8601(c.start_time)},
          {"process_capacity", c.process_capacity ? json(*c.process_capacity) : json(nullptr)}};
}

inline json effort_rows(const TransportPlan& plan, std::size_t limit) {
  json rows = json::array();
  for (std::size_t i = 0; i < plan.flow.size() && i < limit; ++i) {
    json cells = json::array();
    for (std::size_t j = 0; j < plan.flow[i].size(); ++j) {
      if (plan.flow[i][j] <= 0) continue;
      cells.push_back({{"variant", plan.col_variants[j]},
                       {"flow", plan.flow[i][j]},
                       {"distance", plan.distances[i][j]},
                       {"effort", plan.efforts[i][j]}});
    }
    rows.push_back({{"variant", plan.row_variants[i]},
                    {"frequency", plan.row_frequencies[i]},
                    {"exact_match", static_cast<bool>(plan.exact_match_rows[i])},
                    {"cells", cells}});
  }
  return rows;
}

inline json spectrum_summary(const std::vector<SpectrumDiffRecord>& records) {
  std::map<std::string, std::uint64_t> counts{
      {"BOTH_SIMILAR", 0}, {"BOTH_DIFFERENT", 0}, {"ONLY_ORIGINAL", 0}, {"ONLY_SIMULATED", 0}};
  for (const auto& r : records) ++counts[presence_name(r.presence)];
  json top = json::array();
  for (std::size_t i = 0; i < records.size() && i < kReportEffortRows; ++i) top.push_back(to_json(records[i]));
  return {{"segment_count", records.size()}, {"presence_counts", counts}, {"largest_deltas", top}};
}

}  // namespace detail

// In-memory session store plus request routing. Each session serializes its
// mutations behind a shared_mutex; reads of different sessions (and
// simulations of different sessions) proceed in parallel.
class Service {
 public:
  explicit Service(std::optional<std::filesystem::path> snapshot_dir = std::nullopt)
      : _snapshot_dir(std::move(snapshot_dir)) {}

  Response handle(const Request& req) {
    try {
      return route(req);
    } catch (const detail::HttpError& e) {
      return error(e.status, e.kind, e.what());
    } catch (const InvariantViolation& e) {
      Response r = error(422, e.kind(), e.what());
      auto j = r.as_json();
      j["invariant"] = e.invariant();
      r.body = j.dump();
      return r;
    } catch (const Error& e) {
      return error(400, e.kind(), e.what());
    } catch (const std::exception& e) {
      return error(500, "InternalError", e.what());
    }
  }

  std::size_t session_count() const {
    std::lock_guard lock(_store_mutex);
    return _sessions.size();
  }

 private:
  Response route(const Request& req) {
    const auto p = detail::split_path(req.path);
    const auto& m = req.method;
    if (p.empty() || p[0] != "sessions") throw detail::HttpError(404, "NotFound", "no route for " + req.path);
    if (p.size() == 1 && m == "POST") return create_session(req);
    if (p.size() < 2) throw detail::HttpError(405, "MethodNotAllowed", m + " " + req.path);
    auto session = find(p[1]);
    if (p.size() == 2 && m == "GET") return get_model(*session);
    if (p.size() == 3 && p[2] == "model") {
      if (m == "GET") return get_model(*session);
      if (m == "PATCH") return patch_model(*session, req);
    }
    if (p.size() == 3 && p[2] == "simulate" && m == "POST") return simulate_scenario(*session, req);
    if (p.size() == 3 && p[2] == "scenarios" && m == "GET") return list_scenarios(*session);
    if (p.size() == 3 && p[2] == "snapshot") {
      if (m == "GET") return get_snapshot(*session);
      if (m == "POST") return write_snapshot(*session);
    }
    if (p.size() == 5 && p[2] == "scenarios" && m == "GET") return scenario_view(*session, p[3], p[4], req);
    throw detail::HttpError(404, "NotFound", "no route for " + m + " " + req.path);
  }

  static Response error(int status, const std::string& kind, const std::string& message) {
    Response r;
    r.status = status;
    r.body = json{{"error", kind}, {"message", message}}.dump();
    return r;
  }

  static Response reply(int status, json body, std::uint64_t revision) {
    Response r;
    r.status = status;
    if (body.is_object()) body["revision"] = revision;
    r.body = body.dump();
    r.headers[kRevisionHeader] = std::to_string(revision);
    return r;
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(_store_mutex);
    auto it = _sessions.find(id);
    if (it == _sessions.end()) throw detail::HttpError(404, "UnknownSession", "no session '" + id + "'");
    return it->second;
  }

  std::string new_id() {
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    std::ostringstream s;
    s << std::hex << gen() << '-' << _counter.fetch_add(1);
    return s.str();
  }

  Response create_session(const Request& req) {
    ColumnMapping mapping;
    auto q = [&](const char* k, std::string& field) {
      if (auto it = req.query.find(k); it != req.query.end()) field = it->second;
    };
    q("case_column", mapping.case_id);
    q("activity_column", mapping.activity);
    q("resource_column", mapping.resource);
    q("timestamp_column", mapping.timestamp);
    std::string format;
    q("timestamp_format", format);

    auto session = std::make_shared<Session>();
    session->original_log = ingest_csv_text(req.body, mapping, format);
    ProcessTree tree;
    if (auto it = req.query.find("tree"); it != req.query.end()) tree = parse_tree(it->second);
    else tree = discover(session->original_log);
    session->model = enrich(tree, session->original_log);
    session->id = new_id();
    {
      std::lock_guard lock(_store_mutex);
      _sessions[session->id] = session;
    }
    return reply(201, {{"id", session->id}, {"model", to_json(session->model)}}, session->revision);
  }

  static Response get_model(const Session& s) {
    std::shared_lock lock(s.mutex);
    return reply(200, {{"id", s.id}, {"model", to_json(s.model)}, {"scenario_count", s.scenarios.size()}}, s.revision);
  }

  static std::optional<std::uint64_t> expected_revision(const Request& req, json& body) {
    if (body.is_object() && body.contains("revision")) {
      auto r = body["revision"];
      body.erase("revision");
      if (!r.is_number_unsigned() && !r.is_number_integer()) throw Error("MalformedJson", "revision must be an integer");
      return r.get<std::uint64_t>();
    }
    for (const char* h : {"If-Match", kRevisionHeader}) {
      if (auto it = req.headers.find(h); it != req.headers.end()) {
        std::string v = it->second;
        std::erase(v, '"');
        try {
          return std::stoull(v);
        } catch (const std::exception&) {
          throw Error("MalformedRequest", std::string(h) + " must carry a revision number");
        }
      }
    }
    return std::nullopt;
  }

  static Response patch_model(Session& s, const Request& req) {
    json body = detail::parse_body(req.body);
    const auto expected = expected_revision(req, body);
    const auto patch = patch_from_json(body);
    std::unique_lock lock(s.mutex);
    if (expected && *expected != s.revision)
      throw detail::HttpError(409, "StaleRevision",
                              "revision " + std::to_string(*expected) + " is stale; current is " + std::to_string(s.revision));
    s.model = apply_patch(s.model, patch);
    s.pending_patches.push_back(body);
    ++s.revision;
    return reply(200, {{"id", s.id}, {"model", to_json(s.model)}}, s.revision);
  }

  static Response simulate_scenario(Session& s, const Request& req) {
    json body = detail::parse_body(req.body);
    if (!body.is_object()) throw Error("MalformedJson", "simulation config must be a JSON object");
    std::unique_lock lock(s.mutex);
    const auto config = detail::config_from_json(s.model, body);
    auto sc = std::make_shared<Scenario>();
    sc->patches = s.pending_patches;
    sc->config = detail::config_to_json(config);
    sc->model = to_json(s.model);
    sc->log = simulate(s.model, config);
    const auto comparison = compare_logs(s.original_log, sc->log);
    sc->spectrum = spectrum_diff(s.original_log, sc->log);
    sc->comparison_body = to_json(comparison).dump();
    sc->spectrum_body = to_json(sc->spectrum).dump();
    const std::size_t k = s.scenarios.size();
    sc->report_body = json{{"scenario", k},
                           {"patches", sc->patches},
                           {"config", sc->config},
                           {"behavior_delta", to_json(comparison.delta)},
                           {"emd", comparison.plan.emd},
                           {"effort_rows", detail::effort_rows(comparison.plan, kReportEffortRows)},
                           {"spectrum_summary", detail::spectrum_summary(sc->spectrum)}}
                          .dump();
    s.scenarios.push_back(std::move(sc));
    s.pending_patches = json::array();
    return reply(201, {{"scenario", k}, {"scenario_count", s.scenarios.size()}}, s.revision);
  }

  static Response list_scenarios(const Session& s) {
    std::shared_lock lock(s.mutex);
    json list = json::array();
    for (std::size_t k = 0; k < s.scenarios.size(); ++k)
      list.push_back({{"scenario", k}, {"config", s.scenarios[k]->config}, {"patches", s.scenarios[k]->patches}});
    return reply(200, {{"scenarios", list}}, s.revision);
  }

  static Response scenario_view(const Session& s, const std::string& index, const std::string& view, const Request& req) {
    std::shared_ptr<const Scenario> sc;
    std::uint64_t revision = 0;
    {
      std::shared_lock lock(s.mutex);
      std::size_t k = 0, used = 0;
      try {
        k = std::stoull(index, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != index.size() || k >= s.scenarios.size())
        throw detail::HttpError(404, "UnknownScenario", "no scenario '" + index + "'");
      sc = s.scenarios[k];
      revision = s.revision;
    }
    Response r;
    r.headers[kRevisionHeader] = std::to_string(revision);
    if (view == "comparison") {
      r.body = sc->comparison_body;
    } else if (view == "report") {
      r.body = sc->report_body;
    } else if (view == "spectrum") {
      if (auto it = req.query.find("tolerance"); it != req.query.end()) {
        double tol = 0;
        try {
          tol = std::stod(it->second);
        } catch (const std::exception&) {
          throw Error("MalformedRequest", "tolerance must be a number");
        }
        r.body = to_json(spectrum_diff(s.original_log, sc->log, tol)).dump();
      } else {
        r.body = sc->spectrum_body;
      }
    } else if (view == "log") {
      r.content_type = "text/csv";
      r.body = to_csv(sc->log);
    } else {
      throw detail::HttpError(404, "NotFound", "unknown scenario view '" + view + "'");
    }
    return r;
  }

  static json snapshot_of(const Session& s) {
    json scenarios = json::array();
    for (const auto& sc : s.scenarios)
      scenarios.push_back({{"patches", sc->patches},
                           {"config", sc->config},
                           {"model", sc->model},
                           {"log", to_csv(sc->log)},
                           {"report", json::parse(sc->report_body)}});
    return {{"id", s.id},
            {"original_log", to_csv(s.original_log)},
            {"model", to_json(s.model)},
            {"pending_patches", s.pending_patches},
            {"scenarios", scenarios}};
  }

  static Response get_snapshot(const Session& s) {
    std::shared_lock lock(s.mutex);
    return reply(200, snapshot_of(s), s.revision);
  }

  Response write_snapshot(const Session& s) const {
    if (!_snapshot_dir) throw Error("SnapshotDisabled", "service was started without a snapshot directory");
    std::shared_lock lock(s.mutex);
    std::filesystem::create_directories(*_snapshot_dir);
    const auto file = *_snapshot_dir / (s.id + ".json");
    std::ofstream out(file);
    out << snapshot_of(s).dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + file.string());
    return reply(200, {{"id", s.id}, {"path", file.string()}}, s.revision);
  }

  std::optional<std::filesystem::path> _snapshot_dir;
  mutable std::mutex _store_mutex;
  std::map<std::string, std::shared_ptr<Session>> _sessions;
  std::atomic<std::uint64_t> _counter{1};
};

}  // namespace ptsim
