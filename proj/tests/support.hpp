#pragma once

// Test-only helpers: log builders, random generators and brute-force oracles
// that share no code with the library algorithms they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptsim/ptsim.hpp"

namespace ptsim::testing {

using Lang = std::set<Variant>;

// Log with `count` copies of each variant; events one `step_s` apart, cases
// starting `gap_s` apart.
inline EventLog log_of(const std::vector<std::pair<Variant, int>>& groups, double step_s = 60, double gap_s = 600,
                       Millis origin = 0) {
  std::vector<Trace> traces;
  int c = 0;
  for (const auto& [v, n] : groups)
    for (int k = 0; k < n; ++k) {
      Trace t;
      t.case_id = "c" + std::to_string(++c);
      const Millis start = origin + static_cast<Millis>(std::llround(gap_s * 1000 * c));
      for (std::size_t i = 0; i < v.size(); ++i)
        t.events.push_back(Event{t.case_id, v[i], "", start + static_cast<Millis>(std::llround(step_s * 1000 * i))});
      traces.push_back(std::move(t));
    }
  return EventLog(std::move(traces));
}

inline Variant seq(std::initializer_list<const char*> xs) { return Variant(xs.begin(), xs.end()); }

// Language of a tree with each loop redone at most `cap` times, restricted to
// words of length <= max_len. Built from the operator definitions directly.
inline Lang language(const ProcessTree& t, int id, int cap, std::size_t max_len) {
  const auto& n = t.node(id);
  auto concat = [&](const Lang& a, const Lang& b) {
    Lang out;
    for (const auto& x : a)
      for (const auto& y : b)
        if (x.size() + y.size() <= max_len) {
          Variant z = x;
          z.insert(z.end(), y.begin(), y.end());
          out.insert(z);
        }
    return out;
  };
  switch (n.kind) {
    case NodeKind::Silent: return {Variant{}};
    case NodeKind::Activity: return max_len >= 1 ? Lang{Variant{n.label}} : Lang{};
    case NodeKind::Sequence: {
      Lang acc{Variant{}};
      for (int c : n.children) acc = concat(acc, language(t, c, cap, max_len));
      return acc;
    }
    case NodeKind::Xor: {
      Lang acc;
      for (int c : n.children) {
        auto l = language(t, c, cap, max_len);
        acc.insert(l.begin(), l.end());
      }
      return acc;
    }
    case NodeKind::Parallel: {
      Lang acc{Variant{}};
      for (int c : n.children) {
        const auto l = language(t, c, cap, max_len);
        Lang next;
        for (const auto& x : acc)
          for (const auto& y : l) {
            if (x.size() + y.size() > max_len) continue;
            // every interleaving: choose positions of x among x.size()+y.size()
            std::vector<bool> mask(x.size() + y.size(), false);
            std::fill(mask.begin(), mask.begin() + static_cast<long>(x.size()), true);
            std::sort(mask.begin(), mask.end());
            do {
              Variant z;
              std::size_t i = 0, j = 0;
              for (bool from_x : mask) z.push_back(from_x ? x[i++] : y[j++]);
              next.insert(z);
            } while (std::next_permutation(mask.begin(), mask.end()));
          }
        acc = std::move(next);
      }
      return acc;
    }
    case NodeKind::Loop: {
      const auto body = language(t, n.children[0], cap, max_len);
      const auto redo = language(t, n.children[1], cap, max_len);
      Lang acc = body, cur = body;
      for (int k = 0; k < cap; ++k) {
        cur = concat(concat(cur, redo), body);
        acc.insert(cur.begin(), cur.end());
      }
      return acc;
    }
  }
  return {};
}

inline Lang language(const ProcessTree& t, int cap, std::size_t max_len) { return language(t, 0, cap, max_len); }

// All words over `alphabet` of length <= max_len.
inline std::vector<Variant> all_words(const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::vector<Variant> out{Variant{}};
  for (std::size_t from = 0; from < out.size(); ++from) {
    if (out[from].size() == max_len) continue;
    for (const auto& a : alphabet) {
      Variant w = out[from];
      w.push_back(a);
      out.push_back(std::move(w));
    }
  }
  return out;
}

// Random tree with exactly `leaves` leaves drawn from `alphabet` (tau allowed
// when `silent` is set).
inline ProcessTree random_tree(std::mt19937_64& gen, int leaves, const std::vector<std::string>& alphabet, bool silent,
                               int depth = 0, int max_depth = 6) {
  auto roll = [&](int n) { return static_cast<int>(gen() % static_cast<std::uint64_t>(n)); };
  if (leaves == 1 || depth >= max_depth) {
    if (silent && roll(6) == 0) return ProcessTree::silent();
    return ProcessTree::activity(alphabet[static_cast<std::size_t>(roll(static_cast<int>(alphabet.size())))]);
  }
  static const NodeKind kinds[] = {NodeKind::Sequence, NodeKind::Xor, NodeKind::Parallel, NodeKind::Loop};
  const NodeKind kind = kinds[roll(4)];
  const int arity = kind == NodeKind::Loop ? 2 : 2 + roll(std::min(2, leaves - 1));
  std::vector<int> split(static_cast<std::size_t>(arity), 1);
  for (int rest = leaves - arity; rest > 0; --rest) ++split[static_cast<std::size_t>(roll(arity))];
  std::vector<ProcessTree> children;
  for (int s : split) children.push_back(random_tree(gen, s, alphabet, silent, depth + 1, max_depth));
  return ProcessTree::op(kind, std::move(children));
}

// Random log: up to `max_traces` traces over the first `activities` letters.
inline EventLog random_log(std::mt19937_64& gen, int activities, int max_traces, int max_len = 6) {
  std::vector<std::pair<Variant, int>> groups;
  const int traces = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(max_traces));
  for (int k = 0; k < traces; ++k) {
    Variant v;
    const int len = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(max_len));
    for (int i = 0; i < len; ++i) v.push_back(std::string(1, static_cast<char>('a' + gen() % static_cast<std::uint64_t>(activities))));
    groups.emplace_back(v, 1);
  }
  return log_of(groups);
}

// Textbook Levenshtein with a full (n+1)x(m+1) table.
inline std::size_t levenshtein_oracle(const Variant& s, const Variant& t) {
  std::vector<std::vector<std::size_t>> d(s.size() + 1, std::vector<std::size_t>(t.size() + 1));
  for (std::size_t i = 0; i <= s.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= t.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i)
    for (std::size_t j = 1; j <= t.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (s[i - 1] == t[j - 1] ? 0u : 1u)});
  return d[s.size()][t.size()];
}

// Minimum of sum(x_ij * cost_ij) over all non-negative integer matrices with
// the given (balanced) row and column sums, by exhaustive enumeration of the
// (m-1)(n-1) free cells; the last column and last row are then determined.
struct TransportEnumerator {
  const std::vector<int>& supply;
  const std::vector<int>& demand;
  const std::vector<std::vector<std::int64_t>>& cost;
  std::vector<int> col_left;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();

  std::int64_t run() {
    col_left = demand;
    cell(0, 0, supply.empty() ? 0 : supply[0], 0);
    return best;
  }

  void cell(std::size_t i, std::size_t j, int row_left, std::int64_t acc) {
    const std::size_t m = supply.size(), n = demand.size();
    if (i + 1 == m) {  // last row takes every column's remainder
      int total = 0;
      for (std::size_t c = 0; c < n; ++c) {
        total += col_left[c];
        acc += col_left[c] * cost[i][c];
      }
      if (total == supply[i]) best = std::min(best, acc);
      return;
    }
    if (j + 1 == n) {  // last column takes the row's remainder
      if (row_left > col_left[j]) return;
      col_left[j] -= row_left;
      cell(i + 1, 0, supply[i + 1], acc + row_left * cost[i][j]);
      col_left[j] += row_left;
      return;
    }
    const int hi = std::min(row_left, col_left[j]);
    for (int x = 0; x <= hi; ++x) {
      col_left[j] -= x;
      cell(i, j + 1, row_left - x, acc + x * cost[i][j]);
      col_left[j] += x;
    }
  }
};

inline std::int64_t brute_force_transport(const std::vector<int>& supply, const std::vector<int>& demand,
                                          const std::vector<std::vector<std::int64_t>>& cost) {
  return TransportEnumerator{supply, demand, cost, {}}.run();
}

// Ranks with ties averaged, then Pearson correlation of the ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Loop-free tree whose language is `t` with each loop redone at most its
// own max_redos times: *(B, R) becomes X( B, ->( B, R, B ), ... ).
inline ProcessTree unroll_loops(const ProcessTree& t, int id, const std::map<int, LoopParams>& params) {
  const auto& n = t.node(id);
  switch (n.kind) {
    case NodeKind::Silent: return ProcessTree::silent();
    case NodeKind::Activity: return ProcessTree::activity(n.label);
    case NodeKind::Loop: {
      const auto body = unroll_loops(t, n.children[0], params);
      const auto redo = unroll_loops(t, n.children[1], params);
      std::vector<ProcessTree> options{body};
      for (int k = 1; k <= params.at(id).max_redos; ++k) {
        std::vector<ProcessTree> steps{body};
        for (int i = 0; i < k; ++i) {
          steps.push_back(redo);
          steps.push_back(body);
        }
        options.push_back(ProcessTree::op(NodeKind::Sequence, std::move(steps)));
      }
      return ProcessTree::op(NodeKind::Xor, std::move(options));
    }
    default: {
      std::vector<ProcessTree> children;
      for (int c : n.children) children.push_back(unroll_loops(t, c, params));
      return ProcessTree::op(n.kind, std::move(children));
    }
  }
}

// Hand-built model: uniform XOR weights, loops never redone, every activity
// `mean` seconds with zero spread, one roomy organization, fixed arrivals.
inline EnrichedTree basic_model(const std::string& notation, double mean = 10, int capacity = 1000) {
  EnrichedTree m;
  m.tree = parse_tree(notation);
  for (int id = 0; id < m.tree.size(); ++id) {
    const auto& n = m.tree.node(id);
    if (n.kind == NodeKind::Xor)
      m.xor_weights[id] = std::vector<double>(n.children.size(), 1.0 / static_cast<double>(n.children.size()));
    if (n.kind == NodeKind::Loop) m.loop_params[id] = LoopParams{};
  }
  m.organizations["staff"] = Organization{{}, capacity};
  for (const auto& a : m.tree.activities()) {
    m.activity_stats[a] = ActivityStats{mean, 0};
    m.activity_org[a] = "staff";
  }
  m.arrival = 60;
  m.arrival_law = ArrivalLaw::Fixed;
  m.simulation = SimulationDefaults{1, 0, 0};
  validate(m);
  return m;
}

// Random model over a random tree with random parameters.
inline EnrichedTree random_model(std::mt19937_64& gen) {
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "e"};
  std::uniform_real_distribution<double> u(0, 1);
  auto m = basic_model(serialize(random_tree(gen, 2 + static_cast<int>(gen() % 6), alphabet, true)));
  for (auto& [id, w] : m.xor_weights) {
    double s = 0;
    for (auto& x : w) s += (x = 0.05 + u(gen));
    for (auto& x : w) x /= s;
  }
  for (auto& [id, p] : m.loop_params) p = LoopParams{0.7 * u(gen), 1 + static_cast<int>(gen() % 3)};
  m.organizations.clear();
  m.organizations["o1"] = Organization{{"r1", "r2"}, 1 + static_cast<int>(gen() % 2)};
  m.organizations["o2"] = Organization{{}, 1 + static_cast<int>(gen() % 3)};
  for (auto& [a, s] : m.activity_stats) {
    s = ActivityStats{5 + 100 * u(gen), 30 * u(gen)};
    m.activity_org[a] = gen() % 2 ? "o1" : "o2";
  }
  m.arrival = 5 + 60 * u(gen);
  m.arrival_law = gen() % 2 ? ArrivalLaw::Fixed : ArrivalLaw::Exponential;
  validate(m);
  return m;
}

}  // namespace ptsim::testing
