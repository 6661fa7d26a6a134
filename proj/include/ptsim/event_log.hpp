#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ptsim/detail/csv.hpp"
#include "ptsim/error.hpp"
#include "ptsim/timestamp.hpp"

namespace ptsim {

using Activity = std::string;
using Variant = std::vector<Activity>;

struct Event {
  std::string case_id;
  Activity activity;
  std::string resource;
  Millis timestamp = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;

  Variant activities() const {
    Variant v;
    v.reserve(events.size());
    for (const auto& e : events) v.push_back(e.activity);
    return v;
  }

  std::size_t size() const noexcept { return events.size(); }

  friend bool operator==(const Trace&, const Trace&) = default;
};

// EventLog ----------------------------------------------------------------
//
// Immutable after construction. Construction validates the invariants of
// events (non-empty activity), traces (single case, nondecreasing time) and
// the log (unique case ids).
class EventLog {
 public:
  EventLog() = default;

  explicit EventLog(std::vector<Trace> traces) : _traces(std::move(traces)) { validate(); }

  const std::vector<Trace>& traces() const noexcept { return _traces; }
  std::size_t size() const noexcept { return _traces.size(); }
  bool empty() const noexcept { return _traces.empty(); }

  std::size_t event_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : _traces) n += t.size();
    return n;
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  void validate() const {
    std::unordered_map<std::string, int> seen;
    for (const auto& t : _traces) {
      if (!seen.emplace(t.case_id, 0).second) throw Error("InvalidLog", "duplicate case id '" + t.case_id + "'");
      for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& e = t.events[i];
        if (e.activity.empty()) throw Error("InvalidLog", "empty activity label in case '" + t.case_id + "'");
        if (e.case_id != t.case_id) throw Error("InvalidLog", "event of case '" + e.case_id + "' in trace '" + t.case_id + "'");
        if (i > 0 && e.timestamp < t.events[i - 1].timestamp)
          throw Error("InvalidLog", "timestamps decrease within case '" + t.case_id + "'");
      }
    }
  }

  std::vector<Trace> _traces;
};

// Groups events into traces (first-appearance order of cases) and sorts each
// trace by timestamp, keeping input order on ties.
inline EventLog make_log(std::vector<Event> events) {
  std::vector<Trace> traces;
  std::unordered_map<std::string, std::size_t> index;
  for (auto& e : events) {
    auto [it, inserted] = index.emplace(e.case_id, traces.size());
    if (inserted) traces.push_back(Trace{e.case_id, {}});
    traces[it->second].events.push_back(std::move(e));
  }
  for (auto& t : traces) {
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  }
  return EventLog(std::move(traces));
}

// CSV ---------------------------------------------------------------------

struct ColumnMapping {
  std::string case_id = "case_id";
  std::string activity = "activity";
  std::string resource = "resource";
  std::string timestamp = "timestamp";
};

// Reads a header-first CSV. The resource column is optional. An empty
// timestamp_format selects ISO-8601 with optional seconds.
inline EventLog ingest_csv(std::istream& source, const ColumnMapping& mapping = {},
                           const std::string& timestamp_format = {}) {
  std::vector<std::string> row;
  if (!detail::read_csv_record(source, row)) throw Error("EmptyLog", "no header row");
  if (!row.empty() && row[0].rfind("\xEF\xBB\xBF", 0) == 0) row[0].erase(0, 3);

  auto column = [&](const std::string& name, bool required) -> int {
    auto it = std::find(row.begin(), row.end(), name);
    if (it == row.end()) {
      if (required) throw Error("MissingColumn", "column '" + name + "' not found in header");
      return -1;
    }
    return static_cast<int>(it - row.begin());
  };
  const int case_col = column(mapping.case_id, true);
  const int act_col = column(mapping.activity, true);
  const int res_col = column(mapping.resource, false);
  const int ts_col = column(mapping.timestamp, true);
  const auto width = row.size();

  std::vector<Event> events;
  std::size_t index = 0;
  while (detail::read_csv_record(source, row)) {
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    ++index;
    if (row.size() < width) {
      throw Error("SyntaxError", "row " + std::to_string(index) + " has " + std::to_string(row.size()) +
                                     " fields, expected " + std::to_string(width));
    }
    Event e;
    e.case_id = row[case_col];
    e.activity = row[act_col];
    if (res_col >= 0) e.resource = row[res_col];
    auto ts = parse_timestamp(row[ts_col], timestamp_format);
    if (!ts) throw Error("BadTimestamp", "row " + std::to_string(index) + ": '" + row[ts_col] + "'");
    e.timestamp = *ts;
    if (e.activity.empty()) throw Error("InvalidLog", "row " + std::to_string(index) + ": empty activity");
    events.push_back(std::move(e));
  }
  if (events.empty()) throw Error("EmptyLog", "no data rows");
  return make_log(std::move(events));
}

inline EventLog ingest_csv_text(const std::string& text, const ColumnMapping& mapping = {},
                                const std::string& timestamp_format = {}) {
  std::istringstream in(text);
  return ingest_csv(in, mapping, timestamp_format);
}

// Writes the canonical format read back by ingest_csv with default options.
inline void write_csv(std::ostream& out, const EventLog& log) {
  out << "case_id,activity,resource,timestamp\n";
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      detail::write_csv_field(out, e.case_id);
      out << ',';
      detail::write_csv_field(out, e.activity);
      out << ',';
      detail::write_csv_field(out, e.resource);
      out << ',' << format_iso8601(e.timestamp) << '\n';
    }
  }
}

inline std::string to_csv(const EventLog& log) {
  std::ostringstream out;
  write_csv(out, log);
  return out.str();
}

// Variants ----------------------------------------------------------------

struct VariantDistribution {
  std::map<Variant, std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(Variant v, std::uint64_t n = 1) {
    counts[std::move(v)] += n;
    total += n;
  }
};

inline VariantDistribution variants(const EventLog& log) {
  if (log.empty()) throw Error("EmptyLog", "cannot project an empty log");
  VariantDistribution dist;
  for (const auto& t : log.traces()) dist.add(t.activities());
  return dist;
}

inline std::map<Variant, double> relative_frequencies(const VariantDistribution& dist) {
  std::map<Variant, double> freq;
  const double total = static_cast<double>(dist.total);
  for (const auto& [v, n] : dist.counts) freq.emplace(v, static_cast<double>(n) / total);
  return freq;
}

inline std::string variant_label(const Variant& v) {
  std::string s = "<";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += v[i];
  }
  return s + ">";
}

}  // namespace ptsim
