#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ptsim/detail/min_cost_flow.hpp"
#include "ptsim/event_log.hpp"

namespace ptsim {

using Matrix = std::vector<std::vector<double>>;

// Behavior fractions ---------------------------------------------------------

struct BehaviorDelta {
  double new_fraction = 0.0;
  double removed_fraction = 0.0;
  std::uint64_t shared_variant_count = 0;
  std::uint64_t new_variant_count = 0;
  std::uint64_t removed_variant_count = 0;
  std::vector<Variant> new_variants;
  std::vector<Variant> removed_variants;
};

// Set arithmetic on variant keys; counts are ignored.
inline BehaviorDelta behavior_delta(const VariantDistribution& original, const VariantDistribution& simulated) {
  BehaviorDelta d;
  for (const auto& [v, n] : original.counts) {
    if (simulated.counts.count(v)) ++d.shared_variant_count;
    else d.removed_variants.push_back(v);
  }
  for (const auto& [v, n] : simulated.counts)
    if (!original.counts.count(v)) d.new_variants.push_back(v);
  d.new_variant_count = d.new_variants.size();
  d.removed_variant_count = d.removed_variants.size();
  const auto uni = d.shared_variant_count + d.new_variant_count + d.removed_variant_count;
  if (uni > 0) {
    d.new_fraction = static_cast<double>(d.new_variant_count) / static_cast<double>(uni);
    d.removed_fraction = static_cast<double>(d.removed_variant_count) / static_cast<double>(uni);
  }
  return d;
}

// Trace distance ---------------------------------------------------------------

// Token-level Levenshtein distance (unit costs), two-row DP.
inline std::size_t edit_distance(std::span<const Activity> s, std::span<const Activity> t) {
  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

// Edit distance normalized by the longer length; 0 for two empty sequences.
inline double trace_distance(const Variant& s, const Variant& t) {
  const std::size_t longest = std::max(s.size(), t.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(edit_distance(s, t)) / static_cast<double>(longest);
}

// Earth mover's distance -------------------------------------------------------

struct TransportPlan {
  std::vector<Variant> row_variants;
  std::vector<Variant> col_variants;
  std::vector<double> row_frequencies;
  std::vector<double> col_frequencies;
  Matrix distances;
  Matrix flow;
  double emd = 0.0;
  Matrix efforts;
  std::vector<bool> exact_match_rows;
  // Integer problem actually solved: common denominator and the optimal
  // objective in units of (1/denominator) x (distance x 1e9).
  std::uint64_t denominator = 0;
  std::int64_t scaled_cost = 0;
};

inline constexpr std::uint64_t kMaxDenominator = 10'000'000;
inline constexpr double kCostScale = 1e9;
inline constexpr double kFrequencyTolerance = 1e-9;

namespace detail {

// Integer amounts summing to exactly `total`, proportional to freq
// (largest-remainder rounding).
inline std::vector<std::int64_t> integer_amounts(std::span<const double> freq, std::uint64_t total) {
  std::vector<std::int64_t> out(freq.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double exact = freq[i] * static_cast<double>(total);
    const double whole = std::floor(exact + 1e-6);  // snaps values just below an integer
    out[i] = static_cast<std::int64_t>(whole);
    assigned += out[i];
    remainder.emplace_back(exact - whole, i);
  }
  std::stable_sort(remainder.begin(), remainder.end(), [](auto a, auto b) { return a.first > b.first; });
  auto missing = static_cast<std::int64_t>(total) - assigned;
  for (std::size_t k = 0; missing > 0; k = (k + 1) % remainder.size(), --missing) ++out[remainder[k].second];
  for (std::size_t k = remainder.size(); missing < 0; --missing) {
    k = (k == 0 ? remainder.size() : k) - 1;
    auto& v = out[remainder[k].second];
    if (v > 0) --v;
    else ++missing;
  }
  return out;
}

// Makes flow marginals match the given frequencies exactly after integer
// rounding: over-full rows/columns are trimmed, then the remaining positive
// residuals are matched north-west-corner style.
inline void repair_marginals(Matrix& flow, std::span<const double> fa, std::span<const double> fb) {
  const std::size_t m = fa.size(), n = fb.size();
  auto row_res = [&](std::size_t i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += flow[i][j];
    return fa[i] - s;
  };
  auto col_res = [&](std::size_t j) {
    double s = 0;
    for (std::size_t i = 0; i < m; ++i) s += flow[i][j];
    return fb[j] - s;
  };
  for (std::size_t i = 0; i < m; ++i) {
    double excess = -row_res(i);
    for (std::size_t j = 0; j < n && excess > 0; ++j) {
      const double cut = std::min(excess, flow[i][j]);
      flow[i][j] -= cut;
      excess -= cut;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    double excess = -col_res(j);
    for (std::size_t i = 0; i < m && excess > 0; ++i) {
      const double cut = std::min(excess, flow[i][j]);
      flow[i][j] -= cut;
      excess -= cut;
    }
  }
  std::vector<double> r(m), c(n);
  for (std::size_t i = 0; i < m; ++i) r[i] = std::max(0.0, row_res(i));
  for (std::size_t j = 0; j < n; ++j) c[j] = std::max(0.0, col_res(j));
  for (std::size_t i = 0, j = 0; i < m && j < n;) {
    const double x = std::min(r[i], c[j]);
    flow[i][j] += x;
    r[i] -= x;
    c[j] -= x;
    if (r[i] <= 0) ++i;
    else ++j;
  }
}

}  // namespace detail

// Exact optimal transport between two frequency vectors: frequencies are
// scaled to integer supplies over a common denominator (given, or 10^7) and
// the integer transportation problem is solved by min-cost flow with costs
// scaled by 10^9. emd is evaluated with the unscaled distances.
inline TransportPlan solve_emd(std::span<const double> fa, std::span<const double> fb, const Matrix& d,
                               std::optional<std::uint64_t> denominator = std::nullopt) {
  auto sum = [](std::span<const double> f) { return std::accumulate(f.begin(), f.end(), 0.0); };
  if (fa.empty() || fb.empty() || std::abs(sum(fa) - 1.0) > kFrequencyTolerance || std::abs(sum(fb) - 1.0) > kFrequencyTolerance)
    throw Error("DegenerateInput", "frequency vectors must be non-empty and sum to 1");
  for (double x : fa)
    if (x < 0) throw Error("DegenerateInput", "negative frequency");
  for (double x : fb)
    if (x < 0) throw Error("DegenerateInput", "negative frequency");
  if (d.size() != fa.size()) throw Error("DegenerateInput", "distance matrix row count mismatch");
  for (const auto& row : d)
    if (row.size() != fb.size()) throw Error("DegenerateInput", "distance matrix column count mismatch");

  const std::uint64_t total = std::min(denominator.value_or(kMaxDenominator), kMaxDenominator);
  const auto supply = detail::integer_amounts(fa, total);
  const auto demand = detail::integer_amounts(fb, total);
  std::vector<std::vector<std::int64_t>> cost(fa.size(), std::vector<std::int64_t>(fb.size()));
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (std::size_t j = 0; j < fb.size(); ++j) cost[i][j] = std::llround(d[i][j] * kCostScale);
  const auto integral = detail::solve_transport(supply, demand, cost);

  TransportPlan plan;
  plan.row_frequencies.assign(fa.begin(), fa.end());
  plan.col_frequencies.assign(fb.begin(), fb.end());
  plan.distances = d;
  plan.denominator = total;
  plan.flow.assign(fa.size(), std::vector<double>(fb.size(), 0.0));
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (std::size_t j = 0; j < fb.size(); ++j) {
      plan.scaled_cost += integral[i][j] * cost[i][j];
      plan.flow[i][j] = static_cast<double>(integral[i][j]) / static_cast<double>(total);
    }
  detail::repair_marginals(plan.flow, fa, fb);
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (std::size_t j = 0; j < fb.size(); ++j) plan.emd += plan.flow[i][j] * d[i][j];
  return plan;
}

struct EffortMatrix {
  Matrix efforts;
  std::vector<bool> exact_match_rows;
};

// efforts[i][j] = d[i][j] r[i][j] / sum_j d[i][j] r[i][j]; rows whose whole
// mass moves at distance 0 are all-zero and flagged as exact matches.
inline EffortMatrix effort_matrix(const TransportPlan& plan) {
  EffortMatrix out;
  for (std::size_t i = 0; i < plan.flow.size(); ++i) {
    std::vector<double> row(plan.flow[i].size(), 0.0);
    double denom = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = plan.distances[i][j] * plan.flow[i][j];
      denom += row[j];
    }
    const bool exact = denom <= 0.0;
    for (auto& x : row) x = exact ? 0.0 : x / denom;
    out.efforts.push_back(std::move(row));
    out.exact_match_rows.push_back(exact);
  }
  return out;
}

inline void attach_efforts(TransportPlan& plan) {
  auto e = effort_matrix(plan);
  plan.efforts = std::move(e.efforts);
  plan.exact_match_rows = std::move(e.exact_match_rows);
}

// Most frequent first; ties by lexicographic variant order.
inline std::vector<std::pair<Variant, std::uint64_t>> ordered_variants(const VariantDistribution& dist) {
  std::vector<std::pair<Variant, std::uint64_t>> out(dist.counts.begin(), dist.counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

inline TransportPlan compare_distributions(const VariantDistribution& a, const VariantDistribution& b) {
  if (a.total == 0 || b.total == 0) throw Error("EmptyLog", "cannot compare an empty log");
  const auto rows = ordered_variants(a);
  const auto cols = ordered_variants(b);
  std::vector<double> fa, fb;
  for (const auto& [v, n] : rows) fa.push_back(static_cast<double>(n) / static_cast<double>(a.total));
  for (const auto& [v, n] : cols) fb.push_back(static_cast<double>(n) / static_cast<double>(b.total));
  Matrix d(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) d[i][j] = trace_distance(rows[i].first, cols[j].first);
  const std::uint64_t l = std::lcm(a.total, b.total);
  auto plan = solve_emd(fa, fb, d, std::min<std::uint64_t>(l, kMaxDenominator));
  for (const auto& [v, n] : rows) plan.row_variants.push_back(v);
  for (const auto& [v, n] : cols) plan.col_variants.push_back(v);
  attach_efforts(plan);
  return plan;
}

struct LogComparison {
  BehaviorDelta delta;
  TransportPlan plan;
};

inline LogComparison compare_logs(const EventLog& original, const EventLog& simulated) {
  const auto a = variants(original);
  const auto b = variants(simulated);
  return LogComparison{behavior_delta(a, b), compare_distributions(a, b)};
}

// JSON -----------------------------------------------------------------------

inline nlohmann::json to_json(const BehaviorDelta& d) {
  return {{"new_fraction", d.new_fraction},
          {"removed_fraction", d.removed_fraction},
          {"shared_variant_count", d.shared_variant_count},
          {"new_variant_count", d.new_variant_count},
          {"removed_variant_count", d.removed_variant_count},
          {"new_variants", d.new_variants},
          {"removed_variants", d.removed_variants}};
}

inline nlohmann::json to_json(const TransportPlan& p) {
  std::vector<bool> flags(p.exact_match_rows.begin(), p.exact_match_rows.end());
  return {{"row_variants", p.row_variants},
          {"col_variants", p.col_variants},
          {"row_frequencies", p.row_frequencies},
          {"col_frequencies", p.col_frequencies},
          {"distances", p.distances},
          {"flow", p.flow},
          {"emd", p.emd},
          {"efforts", p.efforts},
          {"exact_match_rows", flags}};
}

inline nlohmann::json to_json(const LogComparison& c) {
  return {{"behavior_delta", to_json(c.delta)}, {"transport_plan", to_json(c.plan)}, {"emd", c.plan.emd}};
}

}  // namespace ptsim
