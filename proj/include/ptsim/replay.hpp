#pragma once

#include <climits>
#include <cstdint>
#include <cstring>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ptsim/event_log.hpp"
#include "ptsim/process_tree.hpp"

namespace ptsim {

struct ReplayResult {
  bool fits = false;
  std::map<TreeEdge, std::uint64_t> edge_usage;
  std::map<int, std::vector<int>> loop_redo_counts;  // loop node id -> redos per execution
};

namespace detail {

// Exact membership test with parse recovery.
//
// A subtree is always asked to consume an ordered list of positions of the
// input sequence (not necessarily contiguous, because a parallel operator
// hands each child an arbitrary subset). States are memoized on
// (node, mode, auxiliary, positions). Among all parses the one with the least
// total loop redos wins; remaining ties go to the first candidate in
// enumeration order (lowest XOR child index, earliest split).
class Replayer {
 public:
  Replayer(const ProcessTree& tree, const Variant& sequence, int loop_cap)
      : _tree(tree), _seq(sequence), _cap(loop_cap) {
    _alphabet.resize(static_cast<std::size_t>(tree.size()));
    _nullable.resize(static_cast<std::size_t>(tree.size()));
    for (int id = tree.size() - 1; id >= 0; --id) {
      const auto& n = tree.node(id);
      auto& alpha = _alphabet[static_cast<std::size_t>(id)];
      bool nullable = false;
      switch (n.kind) {
        case NodeKind::Activity: alpha.insert(n.label); break;
        case NodeKind::Silent: nullable = true; break;
        case NodeKind::Xor:
          for (int c : n.children) nullable = nullable || _nullable[static_cast<std::size_t>(c)];
          break;
        case NodeKind::Loop:
          nullable = _nullable[static_cast<std::size_t>(n.children[0])];
          break;
        default:
          nullable = true;
          for (int c : n.children) nullable = nullable && _nullable[static_cast<std::size_t>(c)];
      }
      for (int c : n.children) {
        const auto& ca = _alphabet[static_cast<std::size_t>(c)];
        alpha.insert(ca.begin(), ca.end());
      }
      _nullable[static_cast<std::size_t>(id)] = nullable;
    }
  }

  ReplayResult run() {
    ReplayResult result;
    std::vector<int> all(_seq.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    if (solve(0, all) == kInf) return result;
    result.fits = true;
    rebuild(0, all, result);
    return result;
  }

 private:
  static constexpr int kInf = INT_MAX / 4;

  enum Mode : int { kNode = 0, kSeqFrom = 1, kLoopFrom = 2 };

  struct Entry {
    int cost = kInf;
    // Decision record, meaning depends on the mode and node kind.
    int a = -1;
    int b = -1;
    std::vector<int> assignment;
  };

  using Positions = std::span<const int>;

  std::string key(int node, int mode, int aux, Positions p) const {
    std::string k(sizeof(int) * (3 + p.size()), '\0');
    int head[3] = {node, mode, aux};
    std::memcpy(k.data(), head, sizeof head);
    if (!p.empty()) std::memcpy(k.data() + sizeof head, p.data(), p.size() * sizeof(int));
    return k;
  }

  bool admissible(int node, Positions p) const {
    if (p.empty()) return true;
    const auto& alpha = _alphabet[static_cast<std::size_t>(node)];
    for (int i : p)
      if (!alpha.count(_seq[static_cast<std::size_t>(i)])) return false;
    return true;
  }

  int solve(int node, Positions p) {
    if (!admissible(node, p)) return kInf;
    if (p.empty() && !_nullable[static_cast<std::size_t>(node)]) return kInf;
    const auto& n = _tree.node(node);
    switch (n.kind) {
      case NodeKind::Silent: return p.empty() ? 0 : kInf;
      case NodeKind::Activity: return (p.size() == 1 && _seq[static_cast<std::size_t>(p[0])] == n.label) ? 0 : kInf;
      case NodeKind::Sequence: return seq_from(node, 0, p);
      case NodeKind::Loop: return loop_from(node, 0, p);
      default: break;
    }
    const auto k = key(node, kNode, 0, p);
    if (auto it = _memo.find(k); it != _memo.end()) return it->second.cost;
    _memo.emplace(k, Entry{});  // guards against re-entry on the same state
    Entry best;
    if (n.kind == NodeKind::Xor) {
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const int c = solve(n.children[i], p);
        if (c < best.cost) {
          best.cost = c;
          best.a = static_cast<int>(i);
        }
      }
    } else {
      parallel(n, p, best);
    }
    _memo[k] = best;
    return best.cost;
  }

  void parallel(const TreeNode& n, Positions p, Entry& best) {
    const std::size_t k = n.children.size();
    std::vector<std::vector<int>> candidates(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c)
        if (_alphabet[static_cast<std::size_t>(n.children[c])].count(_seq[static_cast<std::size_t>(p[i])]))
          candidates[i].push_back(static_cast<int>(c));
      if (candidates[i].empty()) return;
    }
    std::vector<std::size_t> choice(p.size(), 0);
    std::vector<int> assignment(p.size());
    std::vector<std::vector<int>> parts(k);
    while (true) {
      for (auto& part : parts) part.clear();
      for (std::size_t i = 0; i < p.size(); ++i) {
        assignment[i] = candidates[i][choice[i]];
        parts[static_cast<std::size_t>(assignment[i])].push_back(p[i]);
      }
      int total = 0;
      for (std::size_t c = 0; c < k && total < kInf; ++c) {
        const int cc = solve(n.children[c], parts[c]);
        total = cc >= kInf ? kInf : total + cc;
      }
      if (total < best.cost) {
        best.cost = total;
        best.assignment = assignment;
      }
      // Odometer over ambiguous positions, last position varies fastest.
      std::size_t i = p.size();
      while (i > 0) {
        --i;
        if (++choice[i] < candidates[i].size()) break;
        choice[i] = 0;
        if (i == 0) return;
      }
      if (p.empty()) return;
    }
  }

  // Children from..end of a sequence node consume p in order.
  int seq_from(int node, int from, Positions p) {
    const auto& n = _tree.node(node);
    if (from == static_cast<int>(n.children.size())) return p.empty() ? 0 : kInf;
    const int child = n.children[static_cast<std::size_t>(from)];
    if (from + 1 == static_cast<int>(n.children.size())) return solve(child, p);
    const auto k = key(node, kSeqFrom, from, p);
    if (auto it = _memo.find(k); it != _memo.end()) return it->second.cost;
    Entry best;
    const auto& alpha = _alphabet[static_cast<std::size_t>(child)];
    for (std::size_t split = 0; split <= p.size(); ++split) {
      if (split > 0 && !alpha.count(_seq[static_cast<std::size_t>(p[split - 1])])) break;
      const int head = solve(child, p.first(split));
      if (head >= best.cost) continue;
      const int tail = seq_from(node, from + 1, p.subspan(split));
      if (tail >= kInf) continue;
      if (head + tail < best.cost) {
        best.cost = head + tail;
        best.a = static_cast<int>(split);
      }
    }
    _memo[k] = best;
    return best.cost;
  }

  // do (redo do)^j with j <= cap - used.
  int loop_from(int node, int used, Positions p) {
    const auto k = key(node, kLoopFrom, used, p);
    if (auto it = _memo.find(k); it != _memo.end()) return it->second.cost;
    _memo.emplace(k, Entry{});
    const auto& n = _tree.node(node);
    const int body = n.children[0];
    const int redo = n.children[1];
    Entry best;
    const int whole = solve(body, p);
    if (whole < best.cost) {
      best.cost = whole;
      best.a = static_cast<int>(p.size());
      best.b = -1;
    }
    if (used < _cap) {
      const auto& body_alpha = _alphabet[static_cast<std::size_t>(body)];
      const auto& redo_alpha = _alphabet[static_cast<std::size_t>(redo)];
      for (std::size_t split = 0; split <= p.size(); ++split) {
        if (split > 0 && !body_alpha.count(_seq[static_cast<std::size_t>(p[split - 1])])) break;
        const int head = solve(body, p.first(split));
        if (head >= kInf || head + 1 >= best.cost) continue;
        for (std::size_t mid = split; mid <= p.size(); ++mid) {
          if (mid > split && !redo_alpha.count(_seq[static_cast<std::size_t>(p[mid - 1])])) break;
          // An empty body followed by an empty redo consumes nothing; skip it.
          if (mid == 0) continue;
          const int r = solve(redo, p.subspan(split, mid - split));
          if (r >= kInf || head + 1 + r >= best.cost) continue;
          const int rest = loop_from(node, used + 1, p.subspan(mid));
          if (rest >= kInf) continue;
          const int total = head + 1 + r + rest;
          if (total < best.cost) {
            best.cost = total;
            best.a = static_cast<int>(split);
            best.b = static_cast<int>(mid);
          }
        }
      }
    }
    _memo[k] = best;
    return best.cost;
  }

  void use_edge(int parent, std::size_t index, ReplayResult& r, std::uint64_t times = 1) {
    const auto& n = _tree.node(parent);
    const auto& c = _tree.node(n.children[index]);
    TreeEdge e{parent, static_cast<int>(index), std::nullopt};
    if (c.kind == NodeKind::Activity) e.child_activity = c.label;
    r.edge_usage[e] += times;
  }

  void rebuild(int node, Positions p, ReplayResult& r) {
    const auto& n = _tree.node(node);
    switch (n.kind) {
      case NodeKind::Silent:
      case NodeKind::Activity: return;
      case NodeKind::Sequence: {
        for (std::size_t i = 0; i < n.children.size(); ++i) use_edge(node, i, r);
        int from = 0;
        while (from + 1 < static_cast<int>(n.children.size())) {
          const auto& e = _memo.at(key(node, kSeqFrom, from, p));
          rebuild(n.children[static_cast<std::size_t>(from)], p.first(static_cast<std::size_t>(e.a)), r);
          p = p.subspan(static_cast<std::size_t>(e.a));
          ++from;
        }
        rebuild(n.children.back(), p, r);
        return;
      }
      case NodeKind::Xor: {
        const auto& e = _memo.at(key(node, kNode, 0, p));
        use_edge(node, static_cast<std::size_t>(e.a), r);
        rebuild(n.children[static_cast<std::size_t>(e.a)], p, r);
        return;
      }
      case NodeKind::Parallel: {
        for (std::size_t i = 0; i < n.children.size(); ++i) use_edge(node, i, r);
        const auto assignment = _memo.at(key(node, kNode, 0, p)).assignment;
        std::vector<std::vector<int>> parts(n.children.size());
        for (std::size_t i = 0; i < p.size(); ++i) parts[static_cast<std::size_t>(assignment[i])].push_back(p[i]);
        for (std::size_t c = 0; c < n.children.size(); ++c) rebuild(n.children[c], parts[c], r);
        return;
      }
      case NodeKind::Loop: {
        int used = 0;
        while (true) {
          const auto& e = _memo.at(key(node, kLoopFrom, used, p));
          if (e.b < 0) {
            rebuild(n.children[0], p, r);
            break;
          }
          rebuild(n.children[0], p.first(static_cast<std::size_t>(e.a)), r);
          rebuild(n.children[1], p.subspan(static_cast<std::size_t>(e.a), static_cast<std::size_t>(e.b - e.a)), r);
          p = p.subspan(static_cast<std::size_t>(e.b));
          ++used;
        }
        use_edge(node, 0, r, static_cast<std::uint64_t>(used) + 1);
        if (used > 0) use_edge(node, 1, r, static_cast<std::uint64_t>(used));
        r.loop_redo_counts[node].push_back(used);
        return;
      }
    }
  }

  const ProcessTree& _tree;
  const Variant& _seq;
  int _cap;
  std::vector<std::set<std::string>> _alphabet;
  std::vector<bool> _nullable;
  std::unordered_map<std::string, Entry> _memo;
};

}  // namespace detail

// Checks whether `sequence` is in the language of `tree` with every loop
// execution limited to at most `loop_cap` redos, and reports the edge usage
// of the parse with the fewest total redos.
inline ReplayResult replay(const ProcessTree& tree, const Variant& sequence, int loop_cap) {
  if (loop_cap < 1) throw Error("InvalidArgument", "loop_cap must be >= 1");
  return detail::Replayer(tree, sequence, loop_cap).run();
}

}  // namespace ptsim
