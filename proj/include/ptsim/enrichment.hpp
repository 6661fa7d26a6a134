#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ptsim/discovery.hpp"
#include "ptsim/event_log.hpp"
#include "ptsim/process_tree.hpp"
#include "ptsim/replay.hpp"
#include "ptsim/timestamp.hpp"

namespace ptsim {

struct LoopParams {
  double redo_probability = 0.0;
  int max_redos = 1;
  friend bool operator==(const LoopParams&, const LoopParams&) = default;
};

// Seconds.
struct ActivityStats {
  double mean_duration = 0.0;
  double std_duration = 0.0;
  friend bool operator==(const ActivityStats&, const ActivityStats&) = default;
};

struct Organization {
  std::set<std::string> resources;
  int capacity = 1;
  friend bool operator==(const Organization&, const Organization&) = default;
};

// day: 0 = Sunday ... 6 = Saturday; hours in [start_hour, end_hour).
struct BusinessWindow {
  int day = 1;
  int start_hour = 0;
  int end_hour = 24;
  friend bool operator==(const BusinessWindow&, const BusinessWindow&) = default;
};

// No windows means ALWAYS open.
struct BusinessHours {
  std::vector<BusinessWindow> windows;
  bool always() const noexcept { return windows.empty(); }
  friend bool operator==(const BusinessHours&, const BusinessHours&) = default;
};

struct TimeWindow {
  Millis start = 0;
  Millis end = 0;
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

enum class ArrivalLaw { Exponential, Fixed };

struct SimulationDefaults {
  std::uint64_t number_of_cases = 1;
  Millis start_time = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const SimulationDefaults&, const SimulationDefaults&) = default;
};

using OrgName = std::string;

// The simulation model: a process tree plus every parameter needed to play
// it out.
struct EnrichedTree {
  ProcessTree tree;
  std::map<int, std::vector<double>> xor_weights;  // XOR node id -> weight per child
  std::map<int, LoopParams> loop_params;           // LOOP node id
  std::map<Activity, ActivityStats> activity_stats;
  double arrival = 1.0;  // mean interarrival, seconds
  ArrivalLaw arrival_law = ArrivalLaw::Exponential;
  std::map<OrgName, Organization> organizations;
  std::map<Activity, OrgName> activity_org;
  std::map<OrgName, std::map<OrgName, double>> handover;
  BusinessHours business_hours;
  std::optional<int> process_capacity;
  std::vector<TimeWindow> interruptions;
  SimulationDefaults simulation;

  double xor_weight(const TreeEdge& e) const {
    const auto& n = tree.node(e.parent_id);
    if (n.kind != NodeKind::Xor) return 1.0;
    return xor_weights.at(e.parent_id).at(static_cast<std::size_t>(e.child_index));
  }

  friend bool operator==(const EnrichedTree&, const EnrichedTree&) = default;
};

inline constexpr double kWeightTolerance = 1e-9;

// Throws InvariantViolation naming the first violated invariant.
inline void validate(const EnrichedTree& m) {
  auto require = [](bool ok, const char* invariant) {
    if (!ok) throw InvariantViolation(invariant);
  };
  for (int id = 0; id < m.tree.size(); ++id) {
    const auto& n = m.tree.node(id);
    if (n.kind == NodeKind::Xor) {
      auto it = m.xor_weights.find(id);
      require(it != m.xor_weights.end(), "every XOR node has weights");
      require(it->second.size() == n.children.size(), "XOR weight count equals child count");
      double sum = 0;
      for (double w : it->second) {
        require(std::isfinite(w) && w >= 0.0 && w <= 1.0 + kWeightTolerance, "XOR weight in [0,1]");
        sum += w;
      }
      require(std::abs(sum - 1.0) <= kWeightTolerance, "XOR weights sum to 1");
    }
    if (n.kind == NodeKind::Loop) {
      auto it = m.loop_params.find(id);
      require(it != m.loop_params.end(), "every LOOP node has loop parameters");
      require(std::isfinite(it->second.redo_probability) && it->second.redo_probability >= 0.0 &&
                  it->second.redo_probability < 1.0,
              "redo_probability in [0,1)");
      require(it->second.max_redos >= 1, "max_redos ≥ 1");
    }
  }
  for (const auto& [id, w] : m.xor_weights) {
    require(id >= 0 && id < m.tree.size() && m.tree.node(id).kind == NodeKind::Xor, "xor_weights keyed by XOR nodes");
  }
  for (const auto& [id, p] : m.loop_params) {
    require(id >= 0 && id < m.tree.size() && m.tree.node(id).kind == NodeKind::Loop, "loop_params keyed by LOOP nodes");
  }
  for (const auto& [a, s] : m.activity_stats) {
    require(std::isfinite(s.mean_duration) && s.mean_duration >= 0.0, "mean_duration ≥ 0");
    require(std::isfinite(s.std_duration) && s.std_duration >= 0.0, "std_duration ≥ 0");
  }
  require(std::isfinite(m.arrival) && m.arrival > 0.0, "arrival > 0");
  for (const auto& [name, org] : m.organizations) require(org.capacity >= 1, "capacity ≥ 1");
  for (const auto& a : m.tree.activities()) {
    require(m.activity_stats.count(a) > 0, "every leaf activity has activity_stats");
    auto it = m.activity_org.find(a);
    require(it != m.activity_org.end(), "every leaf activity has activity_org");
  }
  for (const auto& [a, org] : m.activity_org) require(m.organizations.count(org) > 0, "activity_org names an existing organization");
  for (const auto& [from, row] : m.handover) {
    double sum = 0;
    for (const auto& [to, p] : row) {
      require(std::isfinite(p) && p >= 0.0, "handover probability ≥ 0");
      sum += p;
    }
    require(sum <= 1.0 + kWeightTolerance, "handover rows sum to ≤ 1");
  }
  for (const auto& w : m.business_hours.windows) {
    require(w.day >= 0 && w.day <= 6 && w.start_hour >= 0 && w.start_hour < w.end_hour && w.end_hour <= 24,
            "business window is day 0-6 with 0 ≤ start_hour < end_hour ≤ 24");
  }
  if (m.process_capacity) require(*m.process_capacity >= 1, "process_capacity ≥ 1");
  for (const auto& w : m.interruptions) require(w.start < w.end, "interruption start < end");
  require(m.simulation.number_of_cases >= 1, "number_of_cases ≥ 1");
}

// Replay of a whole log ----------------------------------------------------

struct LogReplay {
  std::vector<std::pair<ReplayResult, std::uint64_t>> fitting;  // result, trace count
  std::uint64_t fitting_traces = 0;
  std::uint64_t total_traces = 0;
};

inline int replay_cap_for(const VariantDistribution& dist) {
  std::size_t longest = 1;
  for (const auto& [v, n] : dist.counts) longest = std::max(longest, v.size());
  return static_cast<int>(longest);
}

// Replays each distinct variant once; the loop cap is the longest trace,
// an upper bound on the redos any minimal parse needs.
inline LogReplay replay_log(const ProcessTree& tree, const VariantDistribution& dist) {
  LogReplay out;
  const int cap = replay_cap_for(dist);
  for (const auto& [v, n] : dist.counts) {
    out.total_traces += n;
    auto r = replay(tree, v, cap);
    if (!r.fits) continue;
    out.fitting_traces += n;
    out.fitting.emplace_back(std::move(r), n);
  }
  if (out.fitting_traces == 0) throw Error("NoFittingTraces", "no trace of the log fits the tree");
  return out;
}

inline std::map<int, std::vector<double>> estimate_xor_weights(const ProcessTree& tree, const LogReplay& replayed) {
  std::map<int, std::vector<double>> weights;
  for (int id = 0; id < tree.size(); ++id) {
    const auto& n = tree.node(id);
    if (n.kind != NodeKind::Xor) continue;
    std::vector<double> usage(n.children.size(), 0.0);
    double total = 0;
    for (const auto& [r, count] : replayed.fitting) {
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        auto it = r.edge_usage.find(TreeEdge{id, static_cast<int>(i), std::nullopt});
        if (it == r.edge_usage.end()) continue;
        const double u = static_cast<double>(it->second) * static_cast<double>(count);
        usage[i] += u;
        total += u;
      }
    }
    if (total == 0) {
      std::fill(usage.begin(), usage.end(), 1.0 / static_cast<double>(n.children.size()));
    } else {
      for (auto& u : usage) u /= total;
    }
    weights.emplace(id, std::move(usage));
  }
  return weights;
}

inline std::map<int, std::vector<double>> estimate_xor_weights(const ProcessTree& tree, const EventLog& log) {
  return estimate_xor_weights(tree, replay_log(tree, variants(log)));
}

// p = total redos / total body completions; max_redos = largest redo count
// seen in one loop execution (1 when the loop never repeats).
inline std::map<int, LoopParams> estimate_loop_params(const ProcessTree& tree, const LogReplay& replayed) {
  std::map<int, LoopParams> params;
  for (int id = 0; id < tree.size(); ++id) {
    if (tree.node(id).kind != NodeKind::Loop) continue;
    std::uint64_t redos = 0, completions = 0;
    int max_seen = 0;
    for (const auto& [r, count] : replayed.fitting) {
      auto it = r.loop_redo_counts.find(id);
      if (it == r.loop_redo_counts.end()) continue;
      for (int k : it->second) {
        redos += static_cast<std::uint64_t>(k) * count;
        completions += static_cast<std::uint64_t>(k + 1) * count;
        max_seen = std::max(max_seen, k);
      }
    }
    LoopParams p;
    if (redos > 0) {
      p.redo_probability = static_cast<double>(redos) / static_cast<double>(completions);
      p.max_redos = max_seen;
    }
    params.emplace(id, p);
  }
  return params;
}

inline std::map<int, LoopParams> estimate_loop_params(const ProcessTree& tree, const EventLog& log) {
  return estimate_loop_params(tree, replay_log(tree, variants(log)));
}

// Duration of an event = gap to the previous event of the same case; first
// events contribute nothing. Population standard deviation.
inline std::map<Activity, ActivityStats> estimate_activity_stats(const EventLog& log) {
  struct Running {
    std::uint64_t n = 0;
    double mean = 0, m2 = 0;
  };
  std::map<Activity, Running> acc;
  for (const auto& t : log.traces()) {
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      auto& r = acc[t.events[i].activity];
      if (i == 0) continue;
      const double x = static_cast<double>(t.events[i].timestamp - t.events[i - 1].timestamp) / 1000.0;
      ++r.n;
      const double delta = x - r.mean;
      r.mean += delta / static_cast<double>(r.n);
      r.m2 += delta * (x - r.mean);
    }
  }
  std::map<Activity, ActivityStats> out;
  for (const auto& [a, r] : acc) {
    ActivityStats s;
    if (r.n > 0) {
      s.mean_duration = r.mean;
      s.std_duration = std::sqrt(std::max(0.0, r.m2 / static_cast<double>(r.n)));
    }
    out.emplace(a, s);
  }
  return out;
}

// Mean gap between consecutive case starts, seconds.
inline double estimate_arrival(const EventLog& log) {
  std::vector<Millis> starts;
  for (const auto& t : log.traces())
    if (!t.events.empty()) starts.push_back(t.events.front().timestamp);
  if (starts.size() < 2) throw Error("SingleCase", "arrival estimation needs at least two cases");
  const auto [lo, hi] = std::minmax_element(starts.begin(), starts.end());
  const double mean = static_cast<double>(*hi - *lo) / 1000.0 / static_cast<double>(starts.size() - 1);
  return std::max(mean, 0.001);
}

struct OrganizationModel {
  std::map<OrgName, Organization> organizations;
  std::map<Activity, OrgName> activity_org;
  std::map<OrgName, std::map<OrgName, double>> handover;
};

inline constexpr double kOrganizationJaccard = 0.5;
inline constexpr const char* kDefaultOrganization = "default";

// Activities whose performer sets have Jaccard index >= 0.5 share an
// organization (transitively). Organizations are named org_1, org_2, ... in
// order of their alphabetically first activity.
inline OrganizationModel discover_organizations(const EventLog& log) {
  std::map<Activity, std::set<std::string>> performers;
  bool any_resource = false;
  for (const auto& t : log.traces())
    for (const auto& e : t.events) {
      performers[e.activity].insert(e.resource);
      any_resource = any_resource || !e.resource.empty();
    }
  OrganizationModel out;
  std::map<Activity, OrgName> org_of;
  if (!any_resource) {
    Organization org;
    org.capacity = static_cast<int>(std::max<std::size_t>(1, log.size()));
    out.organizations.emplace(kDefaultOrganization, org);
    for (const auto& [a, r] : performers) org_of[a] = kDefaultOrganization;
  } else {
    std::vector<Activity> acts;
    for (const auto& [a, r] : performers) acts.push_back(a);
    detail::UnionFind uf(acts.size());
    for (std::size_t i = 0; i < acts.size(); ++i)
      for (std::size_t j = i + 1; j < acts.size(); ++j) {
        const auto& x = performers[acts[i]];
        const auto& y = performers[acts[j]];
        std::size_t inter = 0;
        for (const auto& r : x) inter += y.count(r);
        const std::size_t uni = x.size() + y.size() - inter;
        if (uni > 0 && static_cast<double>(inter) / static_cast<double>(uni) >= kOrganizationJaccard) uf.unite(i, j);
      }
    int next = 1;
    std::map<std::size_t, OrgName> names;
    for (std::size_t i = 0; i < acts.size(); ++i) {
      const auto root = uf.find(i);
      auto it = names.find(root);
      if (it == names.end()) it = names.emplace(root, "org_" + std::to_string(next++)).first;
      auto& org = out.organizations[it->second];
      org.resources.insert(performers[acts[i]].begin(), performers[acts[i]].end());
      org_of[acts[i]] = it->second;
    }
    for (auto& [name, org] : out.organizations) org.capacity = static_cast<int>(std::max<std::size_t>(1, org.resources.size()));
  }
  out.activity_org = org_of;
  std::map<OrgName, std::map<OrgName, std::uint64_t>> flows;
  std::map<OrgName, std::uint64_t> leaving;
  for (const auto& t : log.traces())
    for (std::size_t i = 0; i + 1 < t.events.size(); ++i) {
      const auto& from = org_of.at(t.events[i].activity);
      const auto& to = org_of.at(t.events[i + 1].activity);
      ++flows[from][to];
      ++leaving[from];
    }
  for (const auto& [from, row] : flows)
    for (const auto& [to, n] : row)
      out.handover[from][to] = static_cast<double>(n) / static_cast<double>(leaving[from]);
  return out;
}

inline constexpr double kBusinessHoursCoverage = 0.95;

// Mon-Fri window [start, end) when at least 95% of events fall on weekdays
// and inside the shortest hour window holding 95% of events; ALWAYS otherwise.
inline BusinessHours detect_business_hours(const EventLog& log) {
  std::array<std::uint64_t, 24> by_hour{};
  std::uint64_t total = 0, weekday = 0;
  for (const auto& t : log.traces())
    for (const auto& e : t.events) {
      ++by_hour[static_cast<std::size_t>(hour_of(e.timestamp))];
      const int d = weekday_of(e.timestamp);
      weekday += (d >= 1 && d <= 5);
      ++total;
    }
  BusinessHours hours;
  if (total == 0) return hours;
  const double need = kBusinessHoursCoverage * static_cast<double>(total);
  if (static_cast<double>(weekday) < need) return hours;
  for (int len = 1; len < 24; ++len) {
    for (int start = 0; start + len <= 24; ++start) {
      std::uint64_t in = 0;
      for (int h = start; h < start + len; ++h) in += by_hour[static_cast<std::size_t>(h)];
      if (static_cast<double>(in) >= need) {
        for (int d = 1; d <= 5; ++d) hours.windows.push_back(BusinessWindow{d, start, start + len});
        return hours;
      }
    }
  }
  return hours;
}

// Builds the full simulation model for a tree that fits (most of) the log.
inline EnrichedTree enrich(const ProcessTree& tree, const EventLog& log) {
  if (log.empty()) throw Error("EmptyLog", "cannot enrich from an empty log");
  EnrichedTree m;
  m.tree = tree;
  const auto replayed = replay_log(tree, variants(log));
  m.xor_weights = estimate_xor_weights(tree, replayed);
  m.loop_params = estimate_loop_params(tree, replayed);
  m.activity_stats = estimate_activity_stats(log);
  m.arrival = estimate_arrival(log);
  auto orgs = discover_organizations(log);
  m.organizations = std::move(orgs.organizations);
  m.activity_org = std::move(orgs.activity_org);
  m.handover = std::move(orgs.handover);
  for (const auto& a : tree.activities()) {
    m.activity_stats.try_emplace(a);
    if (!m.activity_org.count(a)) m.activity_org[a] = m.organizations.begin()->first;
  }
  m.business_hours = detect_business_hours(log);
  Millis first = 0;
  bool seen = false;
  for (const auto& t : log.traces())
    if (!t.events.empty() && (!seen || t.events.front().timestamp < first)) {
      first = t.events.front().timestamp;
      seen = true;
    }
  m.simulation = SimulationDefaults{log.size(), first, 0};
  validate(m);
  return m;
}

// Patches ------------------------------------------------------------------

struct XorWeightPatch {
  std::optional<std::vector<double>> full;  // replaces all weights (normalized)
  std::map<int, double> sparse;             // child index -> weight; siblings rescaled
};

struct LoopParamsPatch {
  std::optional<double> redo_probability;
  std::optional<int> max_redos;
};

struct ActivityStatsPatch {
  std::optional<double> mean_duration;
  std::optional<double> std_duration;
};

struct OrganizationPatch {
  std::optional<std::set<std::string>> resources;
  std::optional<int> capacity;
};

struct SubtreeReplacement {
  std::variant<int, std::string> target;  // node id or tree notation of the subtree
  std::string with;                       // tree notation
};

// Sparse overrides of an EnrichedTree plus simulation execution fields.
struct ParameterPatch {
  std::optional<std::string> tree;
  std::vector<SubtreeReplacement> replace_subtree;
  std::map<int, XorWeightPatch> xor_weights;
  std::map<int, LoopParamsPatch> loop_params;
  std::map<Activity, ActivityStatsPatch> activity_stats;
  std::optional<double> arrival;
  std::optional<ArrivalLaw> arrival_law;
  std::map<OrgName, OrganizationPatch> organizations;
  std::map<Activity, OrgName> activity_org;
  std::map<OrgName, std::map<OrgName, double>> handover;
  std::optional<BusinessHours> business_hours;
  std::optional<std::optional<int>> process_capacity;  // engaged-but-empty clears the cap
  std::optional<std::vector<TimeWindow>> interruptions;
  std::optional<std::uint64_t> number_of_cases;
  std::optional<Millis> start_time;
  std::optional<std::uint64_t> seed;
};

namespace detail {

// Carries XOR/LOOP parameters over to a new tree by matching subtrees with
// identical notation (first unused match in pre-order); unmatched nodes get
// uniform weights or a never-redo loop.
inline void remap_parameters(EnrichedTree& m, const ProcessTree& next) {
  std::map<std::string, std::vector<int>> old_by_text;
  for (int id = 0; id < m.tree.size(); ++id) {
    const auto k = m.tree.node(id).kind;
    if (k == NodeKind::Xor || k == NodeKind::Loop) old_by_text[serialize(m.tree, id)].push_back(id);
  }
  std::map<int, std::vector<double>> xw;
  std::map<int, LoopParams> lp;
  for (int id = 0; id < next.size(); ++id) {
    const auto& n = next.node(id);
    if (n.kind != NodeKind::Xor && n.kind != NodeKind::Loop) continue;
    std::optional<int> old;
    auto it = old_by_text.find(serialize(next, id));
    if (it != old_by_text.end() && !it->second.empty()) {
      old = it->second.front();
      it->second.erase(it->second.begin());
    }
    if (n.kind == NodeKind::Xor) {
      if (old && m.xor_weights.count(*old)) xw[id] = m.xor_weights.at(*old);
      else xw[id] = std::vector<double>(n.children.size(), 1.0 / static_cast<double>(n.children.size()));
    } else {
      lp[id] = (old && m.loop_params.count(*old)) ? m.loop_params.at(*old) : LoopParams{};
    }
  }
  m.tree = next;
  m.xor_weights = std::move(xw);
  m.loop_params = std::move(lp);
}

inline int find_subtree(const ProcessTree& tree, const std::string& notation) {
  const auto canonical = serialize(parse_tree(notation));
  for (int id = 0; id < tree.size(); ++id)
    if (serialize(tree, id) == canonical) return id;
  throw Error("UnknownTarget", "subtree '" + notation + "' not found in the tree");
}

inline std::vector<double> renormalize(const std::vector<double>& current, const XorWeightPatch& patch) {
  auto check = [](double w) {
    if (!std::isfinite(w) || w < 0.0 || w > 1.0 + kWeightTolerance) throw InvariantViolation("XOR weight in [0,1]");
  };
  std::vector<double> w = current;
  if (patch.full) {
    if (patch.full->size() != current.size()) throw InvariantViolation("XOR weight count equals child count");
    double sum = 0;
    for (double x : *patch.full) {
      if (!std::isfinite(x) || x < 0.0) throw InvariantViolation("XOR weight in [0,1]");
      sum += x;
    }
    if (sum <= 0) throw InvariantViolation("XOR weights sum to 1");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (*patch.full)[i] / sum;
  }
  if (patch.sparse.empty()) return w;
  double fixed = 0, free_old = 0;
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto it = patch.sparse.find(static_cast<int>(i));
    if (it != patch.sparse.end()) {
      check(it->second);
      fixed += it->second;
    } else {
      free_old += w[i];
      ++free_count;
    }
  }
  for (const auto& [i, x] : patch.sparse)
    if (i < 0 || static_cast<std::size_t>(i) >= w.size())
      throw Error("UnknownTarget", "XOR child index " + std::to_string(i) + " out of range");
  if (free_count == 0) {
    if (fixed <= 0) throw InvariantViolation("XOR weights sum to 1");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = patch.sparse.at(static_cast<int>(i)) / fixed;
    return w;
  }
  if (fixed > 1.0 + kWeightTolerance) throw InvariantViolation("XOR weights sum to 1");
  const double remaining = std::max(0.0, 1.0 - fixed);
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto it = patch.sparse.find(static_cast<int>(i));
    if (it != patch.sparse.end()) w[i] = it->second;
    else w[i] = free_old > 0 ? w[i] * remaining / free_old : remaining / static_cast<double>(free_count);
  }
  return w;
}

}  // namespace detail

// Returns a new model with the patch applied and all invariants re-checked.
inline EnrichedTree apply_patch(const EnrichedTree& model, const ParameterPatch& patch) {
  EnrichedTree m = model;
  if (patch.tree) detail::remap_parameters(m, parse_tree(*patch.tree));
  for (const auto& r : patch.replace_subtree) {
    int id = -1;
    if (std::holds_alternative<int>(r.target)) {
      id = std::get<int>(r.target);
      if (id < 0 || id >= m.tree.size()) throw Error("UnknownTarget", "node " + std::to_string(id) + " does not exist");
    } else {
      id = detail::find_subtree(m.tree, std::get<std::string>(r.target));
    }
    detail::remap_parameters(m, m.tree.replace(id, parse_tree(r.with)));
  }

  const auto tree_activities = m.tree.activities();
  for (const auto& [id, wp] : patch.xor_weights) {
    if (id < 0 || id >= m.tree.size() || m.tree.node(id).kind != NodeKind::Xor)
      throw Error("UnknownTarget", "node " + std::to_string(id) + " is not an XOR node");
    m.xor_weights[id] = detail::renormalize(m.xor_weights[id], wp);
  }
  for (const auto& [id, lp] : patch.loop_params) {
    if (id < 0 || id >= m.tree.size() || m.tree.node(id).kind != NodeKind::Loop)
      throw Error("UnknownTarget", "node " + std::to_string(id) + " is not a LOOP node");
    auto& p = m.loop_params[id];
    if (lp.redo_probability) p.redo_probability = *lp.redo_probability;
    if (lp.max_redos) p.max_redos = *lp.max_redos;
  }
  for (const auto& [name, op] : patch.organizations) {
    auto it = m.organizations.find(name);
    if (it == m.organizations.end()) {
      if (!op.capacity) throw Error("UnknownTarget", "organization '" + name + "' does not exist");
      it = m.organizations.emplace(name, Organization{}).first;
    }
    if (op.resources) it->second.resources = *op.resources;
    if (op.capacity) it->second.capacity = *op.capacity;
  }
  for (const auto& [a, sp] : patch.activity_stats) {
    auto it = m.activity_stats.find(a);
    if (it == m.activity_stats.end()) {
      if (!tree_activities.count(a)) throw Error("UnknownTarget", "activity '" + a + "' is unknown");
      it = m.activity_stats.emplace(a, ActivityStats{}).first;
    }
    if (sp.mean_duration) it->second.mean_duration = *sp.mean_duration;
    if (sp.std_duration) it->second.std_duration = *sp.std_duration;
  }
  for (const auto& [a, org] : patch.activity_org) {
    if (!tree_activities.count(a) && !m.activity_org.count(a))
      throw Error("UnknownTarget", "activity '" + a + "' is unknown");
    if (!m.organizations.count(org)) throw Error("UnknownTarget", "organization '" + org + "' does not exist");
    m.activity_org[a] = org;
  }
  for (const auto& [from, row] : patch.handover) {
    if (!m.organizations.count(from)) throw Error("UnknownTarget", "organization '" + from + "' does not exist");
    for (const auto& [to, p] : row) {
      if (!m.organizations.count(to)) throw Error("UnknownTarget", "organization '" + to + "' does not exist");
      m.handover[from][to] = p;
    }
  }
  if (patch.arrival) m.arrival = *patch.arrival;
  if (patch.arrival_law) m.arrival_law = *patch.arrival_law;
  if (patch.business_hours) m.business_hours = *patch.business_hours;
  if (patch.process_capacity) m.process_capacity = *patch.process_capacity;
  if (patch.interruptions) m.interruptions = *patch.interruptions;
  if (patch.number_of_cases) m.simulation.number_of_cases = *patch.number_of_cases;
  if (patch.start_time) m.simulation.start_time = *patch.start_time;
  if (patch.seed) m.simulation.seed = *patch.seed;
  validate(m);
  return m;
}

}  // namespace ptsim
