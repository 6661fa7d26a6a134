#pragma once

#include <string>

#include <json.hpp>

#include "ptsim/enrichment.hpp"
#include "ptsim/timestamp.hpp"

namespace ptsim {

using json = nlohmann::json;

// JSON document form of an EnrichedTree. Node-keyed maps use the pre-order
// node id as a decimal string key.
//
//   { "tree": "->( a, X( b, c ) )",
//     "xor_weights": { "2": [0.7, 0.3] },
//     "loop_params": { "5": { "redo_probability": 0.3, "max_redos": 1 } },
//     "activity_stats": { "a": { "mean_duration": 10, "std_duration": 0 } },
//     "arrival": 60, "arrival_law": "exponential",
//     "organizations": { "org_1": { "resources": ["Pete"], "capacity": 1 } },
//     "activity_org": { "a": "org_1" },
//     "handover": { "org_1": { "org_2": 1.0 } },
//     "business_hours": "ALWAYS" | [ { "day": 1, "start_hour": 9, "end_hour": 17 } ],
//     "process_capacity": null,
//     "interruptions": [ { "start": "2021-01-01T00:00:00", "end": "..." } ],
//     "simulation": { "number_of_cases": 100, "start_time": "...", "seed": 0 } }
//
// A ParameterPatch uses the same keys, every one optional, with these
// additions: "replace_subtree": [ { "target": <node id | notation>, "with": <notation> } ],
// sparse XOR weights as { "<node id>": { "<child index>": w } }, and the
// simulation fields also accepted at top level.

namespace detail {

inline Millis json_time(const json& j) {
  if (j.is_number_integer()) return j.get<Millis>();
  const auto s = j.get<std::string>();
  auto t = parse_iso8601(s);
  if (!t) throw Error("BadTimestamp", "'" + s + "'");
  return *t;
}

inline int json_node_id(const std::string& key) {
  std::size_t used = 0;
  int id = 0;
  try {
    id = std::stoi(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != key.size() || key.empty()) throw Error("MalformedJson", "node key '" + key + "' is not an integer");
  return id;
}

inline json hours_to_json(const BusinessHours& h) {
  if (h.always()) return "ALWAYS";
  json arr = json::array();
  for (const auto& w : h.windows) arr.push_back({{"day", w.day}, {"start_hour", w.start_hour}, {"end_hour", w.end_hour}});
  return arr;
}

inline BusinessHours hours_from_json(const json& j) {
  BusinessHours h;
  if (j.is_string()) {
    if (j.get<std::string>() != "ALWAYS") throw Error("MalformedJson", "business_hours must be \"ALWAYS\" or a list");
    return h;
  }
  for (const auto& w : j)
    h.windows.push_back(BusinessWindow{w.at("day").get<int>(), w.at("start_hour").get<int>(), w.at("end_hour").get<int>()});
  return h;
}

// Object or array member, or an empty one when absent. Returned by value so
// range-for over the result keeps it alive.
inline json member(const json& j, const char* key, json fallback) { return j.contains(key) ? j[key] : fallback; }

inline std::vector<TimeWindow> windows_from_json(const json& j) {
  std::vector<TimeWindow> out;
  for (const auto& w : j) out.push_back(TimeWindow{json_time(w.at("start")), json_time(w.at("end"))});
  return out;
}

inline ArrivalLaw law_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "exponential") return ArrivalLaw::Exponential;
  if (s == "fixed") return ArrivalLaw::Fixed;
  throw Error("MalformedJson", "arrival_law must be \"exponential\" or \"fixed\"");
}

template <typename F>
auto wrap_json(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error("MalformedJson", e.what());
  }
}

}  // namespace detail

inline json to_json(const EnrichedTree& m) {
  json j;
  j["tree"] = serialize(m.tree);
  j["xor_weights"] = json::object();
  for (const auto& [id, w] : m.xor_weights) j["xor_weights"][std::to_string(id)] = w;
  j["loop_params"] = json::object();
  for (const auto& [id, p] : m.loop_params)
    j["loop_params"][std::to_string(id)] = {{"redo_probability", p.redo_probability}, {"max_redos", p.max_redos}};
  j["activity_stats"] = json::object();
  for (const auto& [a, s] : m.activity_stats)
    j["activity_stats"][a] = {{"mean_duration", s.mean_duration}, {"std_duration", s.std_duration}};
  j["arrival"] = m.arrival;
  j["arrival_law"] = m.arrival_law == ArrivalLaw::Fixed ? "fixed" : "exponential";
  j["organizations"] = json::object();
  for (const auto& [name, o] : m.organizations)
    j["organizations"][name] = {{"resources", o.resources}, {"capacity", o.capacity}};
  j["activity_org"] = m.activity_org;
  j["handover"] = json::object();
  for (const auto& [from, row] : m.handover) j["handover"][from] = row;
  j["business_hours"] = detail::hours_to_json(m.business_hours);
  j["process_capacity"] = m.process_capacity ? json(*m.process_capacity) : json(nullptr);
  j["interruptions"] = json::array();
  for (const auto& w : m.interruptions)
    j["interruptions"].push_back({{"start", format_iso8601(w.start)}, {"end", format_iso8601(w.end)}});
  j["simulation"] = {{"number_of_cases", m.simulation.number_of_cases},
                     {"start_time", format_iso8601(m.simulation.start_time)},
                     {"seed", m.simulation.seed}};
  return j;
}

inline EnrichedTree model_from_json(const json& j) {
  return detail::wrap_json([&] {
    EnrichedTree m;
    m.tree = parse_tree(j.at("tree").get<std::string>());
    const json xor_weights_in = detail::member(j, "xor_weights", json::object());
    for (const auto& [k, v] : xor_weights_in.items())
      m.xor_weights[detail::json_node_id(k)] = v.get<std::vector<double>>();
    const json loop_params_in = detail::member(j, "loop_params", json::object());
    for (const auto& [k, v] : loop_params_in.items())
      m.loop_params[detail::json_node_id(k)] = LoopParams{v.at("redo_probability").get<double>(), v.at("max_redos").get<int>()};
    for (const auto& [k, v] : j.at("activity_stats").items())
      m.activity_stats[k] = ActivityStats{v.at("mean_duration").get<double>(), v.at("std_duration").get<double>()};
    m.arrival = j.at("arrival").get<double>();
    if (j.contains("arrival_law")) m.arrival_law = detail::law_from_json(j["arrival_law"]);
    for (const auto& [k, v] : j.at("organizations").items())
      m.organizations[k] = Organization{v.value("resources", std::set<std::string>{}), v.at("capacity").get<int>()};
    m.activity_org = j.at("activity_org").get<std::map<Activity, OrgName>>();
    if (j.contains("handover")) m.handover = j["handover"].get<std::map<OrgName, std::map<OrgName, double>>>();
    if (j.contains("business_hours")) m.business_hours = detail::hours_from_json(j["business_hours"]);
    if (j.contains("process_capacity") && !j["process_capacity"].is_null()) m.process_capacity = j["process_capacity"].get<int>();
    if (j.contains("interruptions")) m.interruptions = detail::windows_from_json(j["interruptions"]);
    if (j.contains("simulation")) {
      const auto& s = j["simulation"];
      m.simulation.number_of_cases = s.value("number_of_cases", std::uint64_t{1});
      if (s.contains("start_time")) m.simulation.start_time = detail::json_time(s["start_time"]);
      m.simulation.seed = s.value("seed", std::uint64_t{0});
    }
    validate(m);
    return m;
  });
}

inline ParameterPatch patch_from_json(const json& j) {
  return detail::wrap_json([&] {
    if (!j.is_object()) throw Error("MalformedJson", "patch must be a JSON object");
    ParameterPatch p;
    if (j.contains("tree")) p.tree = j["tree"].get<std::string>();
    const json replace_subtree_in = detail::member(j, "replace_subtree", json::array());
    for (const auto& r : replace_subtree_in) {
      SubtreeReplacement s;
      const auto& t = r.at("target");
      if (t.is_number_integer()) s.target = t.get<int>();
      else s.target = t.get<std::string>();
      s.with = r.at("with").get<std::string>();
      p.replace_subtree.push_back(std::move(s));
    }
    const json xor_weights_in = detail::member(j, "xor_weights", json::object());
    for (const auto& [k, v] : xor_weights_in.items()) {
      XorWeightPatch w;
      if (v.is_array()) {
        w.full = v.get<std::vector<double>>();
      } else {
        for (const auto& [idx, x] : v.items()) w.sparse[detail::json_node_id(idx)] = x.get<double>();
      }
      p.xor_weights[detail::json_node_id(k)] = std::move(w);
    }
    const json loop_params_in = detail::member(j, "loop_params", json::object());
    for (const auto& [k, v] : loop_params_in.items()) {
      LoopParamsPatch lp;
      if (v.contains("redo_probability")) lp.redo_probability = v["redo_probability"].get<double>();
      if (v.contains("max_redos")) lp.max_redos = v["max_redos"].get<int>();
      p.loop_params[detail::json_node_id(k)] = lp;
    }
    const json activity_stats_in = detail::member(j, "activity_stats", json::object());
    for (const auto& [k, v] : activity_stats_in.items()) {
      ActivityStatsPatch sp;
      if (v.contains("mean_duration")) sp.mean_duration = v["mean_duration"].get<double>();
      if (v.contains("std_duration")) sp.std_duration = v["std_duration"].get<double>();
      p.activity_stats[k] = sp;
    }
    if (j.contains("arrival")) p.arrival = j["arrival"].get<double>();
    if (j.contains("arrival_law")) p.arrival_law = detail::law_from_json(j["arrival_law"]);
    const json organizations_in = detail::member(j, "organizations", json::object());
    for (const auto& [k, v] : organizations_in.items()) {
      OrganizationPatch op;
      if (v.contains("resources")) op.resources = v["resources"].get<std::set<std::string>>();
      if (v.contains("capacity")) op.capacity = v["capacity"].get<int>();
      p.organizations[k] = op;
    }
    if (j.contains("activity_org")) p.activity_org = j["activity_org"].get<std::map<Activity, OrgName>>();
    if (j.contains("handover")) p.handover = j["handover"].get<std::map<OrgName, std::map<OrgName, double>>>();
    if (j.contains("business_hours")) p.business_hours = detail::hours_from_json(j["business_hours"]);
    if (j.contains("process_capacity")) {
      p.process_capacity = j["process_capacity"].is_null() ? std::optional<int>{} : std::optional<int>{j["process_capacity"].get<int>()};
    }
    if (j.contains("interruptions")) p.interruptions = detail::windows_from_json(j["interruptions"]);
    const json& sim = j.contains("simulation") ? j["simulation"] : j;
    if (sim.contains("number_of_cases")) p.number_of_cases = sim["number_of_cases"].get<std::uint64_t>();
    if (sim.contains("start_time")) p.start_time = detail::json_time(sim["start_time"]);
    if (sim.contains("seed")) p.seed = sim["seed"].get<std::uint64_t>();
    return p;
  });
}

}  // namespace ptsim
