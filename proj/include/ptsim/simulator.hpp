#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "ptsim/enrichment.hpp"
#include "ptsim/event_log.hpp"
#include "ptsim/random.hpp"

namespace ptsim {

struct SimulationConfig {
  std::uint64_t number_of_cases = 1;
  Millis start_time = 0;
  std::uint64_t seed = 0;
  std::optional<int> process_capacity;  // overrides the model's when set
};

inline SimulationConfig default_config(const EnrichedTree& model) {
  return SimulationConfig{model.simulation.number_of_cases, model.simulation.start_time, model.simulation.seed,
                          std::nullopt};
}

// Play-out ------------------------------------------------------------------

// One case's control flow after all choices are drawn: activity leaves under
// sequence and parallel blocks.
struct ExecutionPlan {
  enum class Kind { Activity, Sequence, Parallel };
  struct Node {
    Kind kind = Kind::Sequence;
    Activity label;
    std::vector<int> children;
  };
  std::vector<Node> nodes;  // root is node 0

  int add(Node n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  }
};

namespace detail {

// Draw order: depth-first in child order. An XOR consumes one pick before its
// chosen child is expanded; a loop consumes one uniform before each potential
// redo while below max_redos.
inline int expand(const EnrichedTree& m, int id, RandomStream& rng, ExecutionPlan& plan) {
  const auto& n = m.tree.node(id);
  switch (n.kind) {
    case NodeKind::Activity:
      return plan.add({ExecutionPlan::Kind::Activity, n.label, {}});
    case NodeKind::Silent:
      return plan.add({ExecutionPlan::Kind::Sequence, {}, {}});
    case NodeKind::Xor: {
      const auto& w = m.xor_weights.at(id);
      return expand(m, n.children[rng.pick(w)], rng, plan);
    }
    case NodeKind::Sequence:
    case NodeKind::Parallel: {
      const int self = plan.add({n.kind == NodeKind::Sequence ? ExecutionPlan::Kind::Sequence : ExecutionPlan::Kind::Parallel, {}, {}});
      for (int c : n.children) {
        const int child = expand(m, c, rng, plan);
        plan.nodes[static_cast<std::size_t>(self)].children.push_back(child);
      }
      return self;
    }
    case NodeKind::Loop: {
      const auto& p = m.loop_params.at(id);
      const int self = plan.add({ExecutionPlan::Kind::Sequence, {}, {}});
      auto push = [&](int child) { plan.nodes[static_cast<std::size_t>(self)].children.push_back(child); };
      push(expand(m, n.children[0], rng, plan));
      int redos = 0;
      while (redos < p.max_redos && rng.uniform() < p.redo_probability) {
        push(expand(m, n.children[1], rng, plan));
        push(expand(m, n.children[0], rng, plan));
        ++redos;
      }
      return self;
    }
  }
  return plan.add({});
}

inline Variant flatten(const ExecutionPlan& plan, int id, RandomStream& rng) {
  const auto& n = plan.nodes[static_cast<std::size_t>(id)];
  if (n.kind == ExecutionPlan::Kind::Activity) return {n.label};
  std::vector<Variant> parts;
  for (int c : n.children) parts.push_back(flatten(plan, c, rng));
  Variant out;
  if (n.kind == ExecutionPlan::Kind::Sequence) {
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  }
  // Uniform random interleaving: next element comes from branch i with
  // probability remaining_i / remaining_total.
  std::vector<std::size_t> pos(parts.size(), 0);
  std::vector<double> remaining(parts.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    remaining[i] = static_cast<double>(parts[i].size());
    total += parts[i].size();
  }
  for (; total > 0; --total) {
    const auto i = rng.pick(remaining);
    out.push_back(parts[i][pos[i]++]);
    remaining[i] -= 1.0;
  }
  return out;
}

}  // namespace detail

inline ExecutionPlan playout_plan(const EnrichedTree& model, RandomStream& rng) {
  ExecutionPlan plan;
  plan.nodes.reserve(16);
  // Every expansion allocates the node it returns before its descendants, so
  // the root lands at index 0.
  detail::expand(model, 0, rng, plan);
  return plan;
}

// Samples one activity sequence from the model's language.
inline Variant playout_control_flow(const EnrichedTree& model, RandomStream& rng) {
  const auto plan = playout_plan(model, rng);
  return detail::flatten(plan, 0, rng);
}

// Engine ----------------------------------------------------------------------

struct ScheduleRecord {
  std::string case_id;
  Activity activity;
  OrgName organization;
  int slot = 0;
  Millis enqueued = 0;
  Millis started = 0;
  Millis completed = 0;
};

struct SimulationResult {
  EventLog log;
  std::vector<ScheduleRecord> schedule;  // one per event, in completion order
};

namespace detail {

inline bool in_business_hours(const BusinessHours& h, Millis t) {
  if (h.always()) return true;
  const int wd = weekday_of(t);
  const int hr = hour_of(t);
  for (const auto& w : h.windows)
    if (w.day == wd && hr >= w.start_hour && hr < w.end_hour) return true;
  return false;
}

inline Millis next_business_open(const BusinessHours& h, Millis t) {
  if (h.always()) return t;
  Millis best = std::numeric_limits<Millis>::max();
  for (int d = 0; d <= 7; ++d) {
    const Millis day = start_of_day(t) + d * kMillisPerDay;
    const int wd = weekday_of(day);
    for (const auto& w : h.windows) {
      if (w.day != wd) continue;
      const Millis open = day + w.start_hour * kMillisPerHour;
      const Millis close = day + w.end_hour * kMillisPerHour;
      if (close > t) best = std::min(best, std::max(open, t));
    }
  }
  return best;
}

// Earliest instant >= t inside business hours and outside all interruptions.
inline Millis next_allowed_start(const EnrichedTree& m, Millis t) {
  for (int guard = 0; guard < 10000; ++guard) {
    Millis moved = next_business_open(m.business_hours, t);
    for (const auto& w : m.interruptions)
      if (moved >= w.start && moved < w.end) moved = w.end;
    if (moved == t) return t;
    t = moved;
  }
  return t;
}

class Engine {
 public:
  Engine(const EnrichedTree& model, const SimulationConfig& config)
      : _m(model), _cfg(config), _rng(config.seed), _cap(config.process_capacity ? config.process_capacity : model.process_capacity) {
    for (const auto& [name, org] : _m.organizations) {
      OrgState s;
      s.pool.assign(org.resources.begin(), org.resources.end());
      s.busy.assign(static_cast<std::size_t>(org.capacity), false);
      _orgs.emplace(name, std::move(s));
    }
  }

  SimulationResult run() {
    const auto n = _cfg.number_of_cases;
    _cases.resize(n);
    Millis t = _cfg.start_time;
    for (std::uint64_t k = 0; k < n; ++k) {
      if (k > 0) {
        const double gap = _m.arrival_law == ArrivalLaw::Fixed ? _m.arrival : _rng.exponential(_m.arrival);
        t += static_cast<Millis>(std::llround(gap * 1000.0));
      }
      _cases[k].id = "case_" + std::to_string(k + 1);
      push(t, Kind::Arrival, static_cast<int>(k), -1, {});
    }
    while (!_fel.empty()) {
      const Pending ev = _fel.top();
      _fel.pop();
      _now = ev.time;
      switch (ev.kind) {
        case Kind::Arrival: on_arrival(ev.case_index); break;
        case Kind::Complete: on_complete(ev.case_index, ev.node, ev.org); break;
        case Kind::Dispatch:
          _orgs.at(ev.org).dispatch_pending = false;
          dispatch(ev.org);
          break;
      }
    }
    std::vector<Trace> traces;
    for (auto& c : _cases)
      if (!c.events.empty()) traces.push_back(Trace{c.id, std::move(c.events)});
    return SimulationResult{EventLog(std::move(traces)), completion_ordered()};
  }

 private:
  enum class Kind { Arrival, Complete, Dispatch };

  struct Pending {
    Millis time;
    std::uint64_t seq;
    Kind kind;
    int case_index;
    int node;
    OrgName org;
    bool operator>(const Pending& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };

  struct Request {
    int case_index;
    int node;
    Millis enqueued;
  };

  struct OrgState {
    std::vector<std::string> pool;
    std::vector<bool> busy;
    std::deque<Request> queue;
    bool dispatch_pending = false;
  };

  struct CaseState {
    std::string id;
    ExecutionPlan plan;
    std::vector<int> parent;
    std::vector<int> next_child;  // sequence: index of next child to start
    std::vector<int> open;        // parallel: children still running
    std::vector<Event> events;
  };

  void push(Millis t, Kind kind, int case_index, int node, OrgName org) {
    _fel.push(Pending{t, _seq++, kind, case_index, node, std::move(org)});
  }

  void on_arrival(int k) {
    auto& c = _cases[static_cast<std::size_t>(k)];
    c.plan = playout_plan(_m, _rng);
    const auto size = c.plan.nodes.size();
    c.parent.assign(size, -1);
    c.next_child.assign(size, 0);
    c.open.assign(size, 0);
    for (std::size_t i = 0; i < size; ++i)
      for (int ch : c.plan.nodes[i].children) c.parent[static_cast<std::size_t>(ch)] = static_cast<int>(i);
    if (_cap && _active >= *_cap) {
      _waiting_cases.push_back(k);
      return;
    }
    admit(k);
  }

  void admit(int k) {
    ++_active;
    start_node(k, 0);
  }

  void start_node(int k, int node) {
    auto& c = _cases[static_cast<std::size_t>(k)];
    const auto& n = c.plan.nodes[static_cast<std::size_t>(node)];
    switch (n.kind) {
      case ExecutionPlan::Kind::Activity: request(k, node); return;
      case ExecutionPlan::Kind::Sequence:
        if (n.children.empty()) {
          finish_node(k, node);
        } else {
          c.next_child[static_cast<std::size_t>(node)] = 1;
          start_node(k, n.children.front());
        }
        return;
      case ExecutionPlan::Kind::Parallel:
        if (n.children.empty()) {
          finish_node(k, node);
          return;
        }
        c.open[static_cast<std::size_t>(node)] = static_cast<int>(n.children.size());
        for (int ch : n.children) start_node(k, ch);
        return;
    }
  }

  void finish_node(int k, int node) {
    auto& c = _cases[static_cast<std::size_t>(k)];
    const int p = c.parent[static_cast<std::size_t>(node)];
    if (p < 0) {
      --_active;
      if (!_waiting_cases.empty()) {
        const int next = _waiting_cases.front();
        _waiting_cases.pop_front();
        admit(next);
      }
      return;
    }
    const auto& pn = c.plan.nodes[static_cast<std::size_t>(p)];
    if (pn.kind == ExecutionPlan::Kind::Sequence) {
      auto& idx = c.next_child[static_cast<std::size_t>(p)];
      if (idx < static_cast<int>(pn.children.size())) {
        start_node(k, pn.children[static_cast<std::size_t>(idx++)]);
      } else {
        finish_node(k, p);
      }
    } else if (--c.open[static_cast<std::size_t>(p)] == 0) {
      finish_node(k, p);
    }
  }

  void request(int k, int node) {
    const auto& c = _cases[static_cast<std::size_t>(k)];
    const auto& org = _m.activity_org.at(c.plan.nodes[static_cast<std::size_t>(node)].label);
    _orgs.at(org).queue.push_back(Request{k, node, _now});
    dispatch(org);
  }

  void dispatch(const OrgName& name) {
    auto& org = _orgs.at(name);
    while (!org.queue.empty()) {
      auto free = std::find(org.busy.begin(), org.busy.end(), false);
      if (free == org.busy.end()) return;
      const Millis allowed = next_allowed_start(_m, _now);
      if (allowed > _now) {
        if (!org.dispatch_pending) {
          org.dispatch_pending = true;
          push(allowed, Kind::Dispatch, -1, -1, name);
        }
        return;
      }
      const Request r = org.queue.front();
      org.queue.pop_front();
      *free = true;
      const int slot = static_cast<int>(free - org.busy.begin());
      auto& c = _cases[static_cast<std::size_t>(r.case_index)];
      const auto& label = c.plan.nodes[static_cast<std::size_t>(r.node)].label;
      const Millis end = _now + sample_duration(label);
      _schedule.push_back(ScheduleRecord{c.id, label, name, slot, r.enqueued, _now, end});
      _record_of[{r.case_index, r.node}] = _schedule.size() - 1;
      push(end, Kind::Complete, r.case_index, r.node, name);
    }
  }

  Millis sample_duration(const Activity& a) {
    const auto& s = _m.activity_stats.at(a);
    double seconds = s.mean_duration;
    if (s.std_duration > 0) {
      int attempt = 0;
      do {
        seconds = _rng.normal(s.mean_duration, s.std_duration);
      } while (seconds < 0 && ++attempt < 100);
      if (seconds < 0) seconds = 0;
    }
    return static_cast<Millis>(std::llround(seconds * 1000.0));
  }

  void on_complete(int k, int node, const OrgName& name) {
    auto& org = _orgs.at(name);
    const auto rec_index = _record_of.at({k, node});
    _record_of.erase({k, node});
    const auto& rec = _schedule[rec_index];
    org.busy[static_cast<std::size_t>(rec.slot)] = false;
    const std::string resource = static_cast<std::size_t>(rec.slot) < org.pool.size()
                                     ? org.pool[static_cast<std::size_t>(rec.slot)]
                                     : (org.pool.empty() ? std::string{} : name + "_" + std::to_string(rec.slot + 1));
    auto& c = _cases[static_cast<std::size_t>(k)];
    c.events.push_back(Event{c.id, rec.activity, resource, _now});
    _completion_order.push_back(rec_index);
    finish_node(k, node);
    dispatch(name);
  }

  const EnrichedTree& _m;
  SimulationConfig _cfg;
  RandomStream _rng;
  std::optional<int> _cap;
  std::map<OrgName, OrgState> _orgs;
  std::vector<CaseState> _cases;
  std::deque<int> _waiting_cases;
  int _active = 0;
  Millis _now = 0;
  std::uint64_t _seq = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> _fel;
  std::vector<ScheduleRecord> _schedule;
  std::map<std::pair<int, int>, std::size_t> _record_of;
  std::vector<std::size_t> _completion_order;

  // Schedule reordered to completion order (matching log event order per case).
  std::vector<ScheduleRecord> completion_ordered() const {
    std::vector<ScheduleRecord> out;
    out.reserve(_completion_order.size());
    for (auto i : _completion_order) out.push_back(_schedule[i]);
    return out;
  }
};

}  // namespace detail

inline void check_config(const SimulationConfig& config) {
  if (config.number_of_cases < 1) throw Error("InvalidConfig", "number_of_cases must be at least 1");
  if (config.process_capacity && *config.process_capacity < 1)
    throw Error("InvalidConfig", "process_capacity must be at least 1");
}

// Runs the discrete-event simulation. Identical (model, config) pairs give
// identical results. Cases whose play-out is empty (all silent) produce no trace.
inline SimulationResult simulate_detailed(const EnrichedTree& model, const SimulationConfig& config) {
  check_config(config);
  validate(model);
  detail::Engine engine(model, config);
  return engine.run();
}

inline EventLog simulate(const EnrichedTree& model, const SimulationConfig& config) {
  return simulate_detailed(model, config).log;
}

// Mean queueing delay (service start minus enqueue) per activity, seconds.
// Only defined for engine output, whose schedule accompanies the log.
inline std::map<Activity, double> waiting_time_report(const SimulationResult& result, const EnrichedTree& model) {
  if (result.schedule.size() != result.log.event_count())
    throw Error("NotASimulatedLog", "log has no matching engine schedule");
  std::map<Activity, std::pair<double, std::uint64_t>> acc;
  for (const auto& r : result.schedule) {
    if (!model.activity_stats.count(r.activity))
      throw Error("NotASimulatedLog", "activity '" + r.activity + "' is not part of the model");
    auto& [sum, n] = acc[r.activity];
    sum += static_cast<double>(r.started - r.enqueued) / 1000.0;
    ++n;
  }
  std::map<Activity, double> out;
  for (const auto& [a, sn] : acc) out[a] = sn.first / static_cast<double>(sn.second);
  return out;
}

}  // namespace ptsim
