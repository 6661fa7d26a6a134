#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptsim/event_log.hpp"
#include "ptsim/process_tree.hpp"

namespace ptsim {

struct DirectlyFollowsGraph {
  std::set<Activity> nodes;
  std::map<std::pair<Activity, Activity>, std::uint64_t> arcs;
  std::map<Activity, std::uint64_t> start_activities;
  std::map<Activity, std::uint64_t> end_activities;

  bool has_arc(const Activity& a, const Activity& b) const { return arcs.count({a, b}) > 0; }
};

inline DirectlyFollowsGraph build_dfg(const VariantDistribution& dist) {
  DirectlyFollowsGraph g;
  for (const auto& [v, n] : dist.counts) {
    if (v.empty()) continue;
    g.nodes.insert(v.begin(), v.end());
    g.start_activities[v.front()] += n;
    g.end_activities[v.back()] += n;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) g.arcs[{v[i], v[i + 1]}] += n;
  }
  return g;
}

struct Cut {
  NodeKind kind;
  std::vector<std::set<Activity>> parts;
};

namespace detail {

// Small dense-index view of a DFG.
struct IndexedGraph {
  std::vector<Activity> names;
  std::vector<std::vector<bool>> adj;
  std::vector<bool> start, end;

  explicit IndexedGraph(const DirectlyFollowsGraph& g) : names(g.nodes.begin(), g.nodes.end()) {
    const std::size_t n = names.size();
    adj.assign(n, std::vector<bool>(n, false));
    start.assign(n, false);
    end.assign(n, false);
    std::map<Activity, std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx[names[i]] = i;
    for (const auto& [arc, c] : g.arcs) adj[idx.at(arc.first)][idx.at(arc.second)] = true;
    for (const auto& [a, c] : g.start_activities) start[idx.at(a)] = true;
    for (const auto& [a, c] : g.end_activities) end[idx.at(a)] = true;
  }

  std::size_t size() const { return names.size(); }

  // Transitive (non-reflexive) reachability.
  std::vector<std::vector<bool>> closure() const {
    auto r = adj;
    const std::size_t n = size();
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (r[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (r[k][j]) r[i][j] = true;
    return r;
  }
};

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

// Groups indices by union-find root, groups ordered by smallest member (and
// therefore by smallest activity label, since names are sorted).
inline std::vector<std::vector<std::size_t>> groups_of(UnionFind& uf, std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [r, g] : by_root) out.push_back(std::move(g));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

inline std::vector<std::set<Activity>> named(const IndexedGraph& g, const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<std::set<Activity>> out;
  for (const auto& grp : groups) {
    std::set<Activity> s;
    for (auto i : grp) s.insert(g.names[i]);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::optional<Cut> xor_cut(const IndexedGraph& g) {
  UnionFind uf(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (g.adj[i][j]) uf.unite(i, j);
  auto groups = groups_of(uf, g.size());
  if (groups.size() < 2) return std::nullopt;
  return Cut{NodeKind::Xor, named(g, groups)};
}

inline std::optional<Cut> sequence_cut(const IndexedGraph& g) {
  const std::size_t n = g.size();
  const auto reach = g.closure();
  UnionFind uf(n);
  // Strongly connected components.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (reach[i][j] && reach[j][i]) uf.unite(i, j);
  // Merge groups that are mutually unreachable or mutually reachable, then
  // check the remaining groups form a chain with no backward reachability;
  // any backward pair is merged and the process repeats.
  auto group_reach = [&](const std::vector<std::vector<std::size_t>>& groups) {
    const std::size_t k = groups.size();
    std::vector<std::vector<bool>> greach(k, std::vector<bool>(k, false));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        if (a != b)
          for (auto i : groups[a])
            for (auto j : groups[b])
              if (reach[i][j]) greach[a][b] = true;
    return greach;
  };
  std::vector<std::vector<std::size_t>> sorted;
  while (true) {
    auto groups = groups_of(uf, n);
    const std::size_t k = groups.size();
    if (k < 2) return std::nullopt;
    const auto greach = group_reach(groups);
    bool changed = false;
    for (std::size_t a = 0; a < k && !changed; ++a)
      for (std::size_t b = a + 1; b < k && !changed; ++b)
        if (greach[a][b] == greach[b][a]) changed = uf.unite(groups[a].front(), groups[b].front());
    if (changed) continue;
    // Order by out-degree in the group relation (k-1, k-2, ..., 0 for a chain).
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (std::size_t a = 0; a < k; ++a)
      order.emplace_back(static_cast<std::size_t>(std::count(greach[a].begin(), greach[a].end(), true)), a);
    std::stable_sort(order.begin(), order.end(), [](auto x, auto y) { return x.first > y.first; });
    for (std::size_t x = 0; x < k && !changed; ++x)
      for (std::size_t y = x + 1; y < k && !changed; ++y)
        if (greach[order[y].second][order[x].second])
          changed = uf.unite(groups[order[x].second].front(), groups[order[y].second].front());
    if (changed) continue;
    for (auto [c, a] : order) sorted.push_back(groups[a]);
    break;
  }
  return Cut{NodeKind::Sequence, named(g, sorted)};
}

inline std::optional<Cut> parallel_cut(const IndexedGraph& g) {
  const std::size_t n = g.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!(g.adj[i][j] && g.adj[j][i])) uf.unite(i, j);
  auto groups = groups_of(uf, n);
  // Every part needs a start and an end activity; deficient parts are merged
  // into the first complete one.
  std::vector<std::vector<std::size_t>> complete, deficient;
  for (auto& grp : groups) {
    bool s = false, e = false;
    for (auto i : grp) {
      s = s || g.start[i];
      e = e || g.end[i];
    }
    (s && e ? complete : deficient).push_back(std::move(grp));
  }
  if (complete.size() < 2) return std::nullopt;
  for (auto& d : deficient) complete.front().insert(complete.front().end(), d.begin(), d.end());
  std::sort(complete.front().begin(), complete.front().end());
  std::sort(complete.begin(), complete.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return Cut{NodeKind::Parallel, named(g, complete)};
}

inline std::optional<Cut> loop_cut(const IndexedGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> in_do(n, false);
  for (std::size_t i = 0; i < n; ++i) in_do[i] = g.start[i] || g.end[i];
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (g.adj[i][j] && !in_do[i] && !in_do[j]) uf.unite(i, j);
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t i = 0; i < n; ++i)
    if (!in_do[i]) comps[uf.find(i)].push_back(i);

  std::vector<std::vector<std::size_t>> redo;
  for (auto& [root, comp] : comps) {
    std::vector<bool> member(n, false);
    for (auto i : comp) member[i] = true;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = 0; j < n && ok; ++j) {
        if (!g.adj[i][j]) continue;
        if (!member[i] && member[j] && !g.end[i]) ok = false;   // entered only from ends
        if (member[i] && !member[j] && !g.start[j]) ok = false;  // left only to starts
      }
    if (ok) {
      redo.push_back(comp);
    } else {
      for (auto i : comp) in_do[i] = true;
    }
  }
  if (redo.empty()) return std::nullopt;
  std::vector<std::size_t> body;
  for (std::size_t i = 0; i < n; ++i)
    if (in_do[i]) body.push_back(i);
  if (body.empty()) return std::nullopt;
  std::vector<std::vector<std::size_t>> parts{body};
  std::sort(redo.begin(), redo.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  parts.insert(parts.end(), redo.begin(), redo.end());
  return Cut{NodeKind::Loop, named(g, parts)};
}

using SubLog = std::map<Variant, std::uint64_t>;

inline std::vector<SubLog> split_log(const SubLog& log, const Cut& cut) {
  std::map<Activity, std::size_t> part_of;
  for (std::size_t p = 0; p < cut.parts.size(); ++p)
    for (const auto& a : cut.parts[p]) part_of[a] = p;
  std::vector<SubLog> out(cut.parts.size());
  for (const auto& [trace, count] : log) {
    switch (cut.kind) {
      case NodeKind::Xor:
        out[part_of.at(trace.front())][trace] += count;
        break;
      case NodeKind::Sequence:
      case NodeKind::Parallel: {
        std::vector<Variant> projected(cut.parts.size());
        for (const auto& a : trace) projected[part_of.at(a)].push_back(a);
        for (std::size_t p = 0; p < projected.size(); ++p) out[p][projected[p]] += count;
        break;
      }
      case NodeKind::Loop: {
        // Maximal runs within one part; runs alternate do / redo.
        std::size_t i = 0;
        while (i < trace.size()) {
          const std::size_t p = part_of.at(trace[i]);
          Variant run;
          while (i < trace.size() && part_of.at(trace[i]) == p) run.push_back(trace[i++]);
          out[p][run] += count;
        }
        break;
      }
      default: break;
    }
  }
  return out;
}

inline ProcessTree mine(const SubLog& log) {
  std::set<Activity> alphabet;
  bool has_empty = false;
  SubLog non_empty;
  for (const auto& [t, n] : log) {
    if (t.empty()) {
      has_empty = true;
      continue;
    }
    alphabet.insert(t.begin(), t.end());
    non_empty[t] += n;
  }
  if (alphabet.empty()) return ProcessTree::silent();
  if (has_empty) return ProcessTree::op(NodeKind::Xor, {ProcessTree::silent(), mine(non_empty)});

  if (alphabet.size() == 1) {
    const Activity& a = *alphabet.begin();
    bool all_single = true;
    for (const auto& [t, n] : log) all_single = all_single && t.size() == 1;
    if (all_single) return ProcessTree::activity(a);
    return ProcessTree::op(NodeKind::Loop, {ProcessTree::activity(a), ProcessTree::silent()});
  }

  VariantDistribution dist;
  for (const auto& [t, n] : log) dist.add(t, n);
  const auto dfg = build_dfg(dist);
  const IndexedGraph g(dfg);
  std::optional<Cut> cut = xor_cut(g);
  if (!cut) cut = sequence_cut(g);
  if (!cut) cut = parallel_cut(g);
  if (!cut) cut = loop_cut(g);
  if (!cut) {
    std::vector<ProcessTree> children{ProcessTree::silent()};
    for (const auto& a : alphabet) children.push_back(ProcessTree::activity(a));
    return ProcessTree::op(NodeKind::Loop, std::move(children));
  }
  std::vector<ProcessTree> children;
  for (const auto& sub : split_log(log, *cut)) children.push_back(mine(sub));
  return ProcessTree::op(cut->kind, std::move(children));
}

}  // namespace detail

// Applies the first cut that exists, in the order XOR, SEQUENCE, PARALLEL,
// LOOP. Requires at least two activities.
inline std::optional<Cut> find_cut(const DirectlyFollowsGraph& dfg) {
  if (dfg.nodes.size() < 2) return std::nullopt;
  const detail::IndexedGraph g(dfg);
  if (auto c = detail::xor_cut(g)) return c;
  if (auto c = detail::sequence_cut(g)) return c;
  if (auto c = detail::parallel_cut(g)) return c;
  return detail::loop_cut(g);
}

inline ProcessTree discover(const VariantDistribution& dist) {
  if (dist.total == 0) throw Error("EmptyLog", "cannot discover from an empty log");
  return detail::mine(detail::SubLog(dist.counts.begin(), dist.counts.end()));
}

// Basic inductive miner. Every trace of the log fits the result.
inline ProcessTree discover(const EventLog& log) {
  if (log.empty()) throw Error("EmptyLog", "cannot discover from an empty log");
  return discover(variants(log));
}

}  // namespace ptsim
