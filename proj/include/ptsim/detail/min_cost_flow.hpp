#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

namespace ptsim::detail {

// Min-cost flow by successive shortest paths with Johnson potentials and a
// dense O(V^2) Dijkstra (the transportation networks here are complete
// bipartite graphs, so a heap buys nothing). Integer capacities and costs.
class MinCostFlow {
 public:
  using Int = std::int64_t;
  static constexpr Int kInf = std::numeric_limits<Int>::max() / 4;

  explicit MinCostFlow(std::size_t nodes) : _adj(nodes) {}

  // Returns the index of the forward arc.
  std::size_t add_arc(std::size_t from, std::size_t to, Int capacity, Int cost) {
    _arcs.push_back(Arc{to, capacity, cost});
    _adj[from].push_back(_arcs.size() - 1);
    _arcs.push_back(Arc{from, 0, -cost});
    _adj[to].push_back(_arcs.size() - 1);
    return _arcs.size() - 2;
  }

  Int flow_on(std::size_t arc) const { return _arcs[arc ^ 1].capacity; }

  // Pushes up to `limit` units from s to t at minimum cost. Arc costs must be
  // non-negative on arcs that start with capacity. Returns units sent.
  Int run(std::size_t s, std::size_t t, Int limit) {
    const std::size_t V = _adj.size();
    std::vector<Int> potential(V, 0), dist(V);
    std::vector<std::size_t> via(V);
    std::vector<bool> done(V);
    Int sent = 0;
    while (sent < limit) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), false);
      dist[s] = 0;
      for (std::size_t iter = 0; iter < V; ++iter) {
        std::size_t u = V;
        for (std::size_t v = 0; v < V; ++v)
          if (!done[v] && dist[v] < kInf && (u == V || dist[v] < dist[u])) u = v;
        if (u == V) break;
        done[u] = true;
        for (auto a : _adj[u]) {
          const Arc& arc = _arcs[a];
          if (arc.capacity == 0) continue;
          const Int nd = dist[u] + arc.cost + potential[u] - potential[arc.to];
          if (nd < dist[arc.to]) {
            dist[arc.to] = nd;
            via[arc.to] = a;
          }
        }
      }
      if (dist[t] >= kInf) break;
      for (std::size_t v = 0; v < V; ++v) potential[v] += std::min(dist[v], dist[t]);
      Int amount = limit - sent;
      for (std::size_t v = t; v != s; v = _arcs[via[v] ^ 1].to) amount = std::min(amount, _arcs[via[v]].capacity);
      for (std::size_t v = t; v != s; v = _arcs[via[v] ^ 1].to) {
        _arcs[via[v]].capacity -= amount;
        _arcs[via[v] ^ 1].capacity += amount;
      }
      sent += amount;
    }
    return sent;
  }

 private:
  struct Arc {
    std::size_t to;
    Int capacity;
    Int cost;
  };
  std::vector<Arc> _arcs;
  std::vector<std::vector<std::size_t>> _adj;
};

// Balanced transportation problem: integral optimal flow matrix.
inline std::vector<std::vector<std::int64_t>> solve_transport(const std::vector<std::int64_t>& supply,
                                                              const std::vector<std::int64_t>& demand,
                                                              const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t m = supply.size(), n = demand.size();
  const std::size_t source = m + n, sink = m + n + 1;
  MinCostFlow g(m + n + 2);
  std::int64_t total = 0, cap = 0;
  for (auto x : supply) total += x;
  for (auto x : demand) cap += x;
  const std::int64_t inner = std::max(total, cap);
  for (std::size_t i = 0; i < m; ++i) g.add_arc(source, i, supply[i], 0);
  std::vector<std::vector<std::size_t>> arc(m, std::vector<std::size_t>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) arc[i][j] = g.add_arc(i, m + j, inner, cost[i][j]);
  for (std::size_t j = 0; j < n; ++j) g.add_arc(m + j, sink, demand[j], 0);
  g.run(source, sink, total);
  std::vector<std::vector<std::int64_t>> flow(m, std::vector<std::int64_t>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) flow[i][j] = g.flow_on(arc[i][j]);
  return flow;
}

}  // namespace ptsim::detail
