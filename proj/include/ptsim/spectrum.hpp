#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ptsim/event_log.hpp"

namespace ptsim {

using Segment = std::pair<Activity, Activity>;

struct SegmentStats {
  Segment segment;
  std::uint64_t frequency = 0;
  double avg_time = 0.0;  // seconds

  bool operator==(const SegmentStats&) const = default;
};

enum class Presence { BothSimilar, BothDifferent, OnlyOriginal, OnlySimulated };

inline const char* presence_name(Presence p) {
  switch (p) {
    case Presence::BothSimilar: return "BOTH_SIMILAR";
    case Presence::BothDifferent: return "BOTH_DIFFERENT";
    case Presence::OnlyOriginal: return "ONLY_ORIGINAL";
    case Presence::OnlySimulated: return "ONLY_SIMULATED";
  }
  return "";
}

struct SpectrumDiffRecord {
  Segment segment;
  Presence presence = Presence::BothSimilar;
  std::optional<SegmentStats> original;
  std::optional<SegmentStats> simulated;
  double avg_time_delta = 0.0;
  std::int64_t freq_delta = 0;
  double tolerance = 0.0;
};

inline std::string segment_label(const Segment& s) { return "(" + s.first + "," + s.second + ")"; }

// Multiset of directly-follows activity pairs.
inline std::map<Segment, std::uint64_t> segments(const EventLog& log) {
  std::map<Segment, std::uint64_t> out;
  for (const auto& t : log.traces())
    for (std::size_t i = 1; i < t.events.size(); ++i) ++out[{t.events[i - 1].activity, t.events[i].activity}];
  return out;
}

inline std::map<Segment, SegmentStats> spectrum(const EventLog& log) {
  // Gaps are summed in integer milliseconds so the mean is order independent.
  std::map<Segment, std::pair<std::uint64_t, Millis>> acc;
  for (const auto& t : log.traces())
    for (std::size_t i = 1; i < t.events.size(); ++i) {
      auto& [n, total] = acc[{t.events[i - 1].activity, t.events[i].activity}];
      ++n;
      total += t.events[i].timestamp - t.events[i - 1].timestamp;
    }
  std::map<Segment, SegmentStats> out;
  for (const auto& [seg, a] : acc)
    out[seg] = SegmentStats{seg, a.first, static_cast<double>(a.second) / static_cast<double>(a.first) / 1000.0};
  return out;
}

inline constexpr double kRelativeTolerance = 0.05;
inline constexpr double kMinToleranceSeconds = 1.0;

inline double default_tolerance(const SegmentStats& original) {
  return std::max(kRelativeTolerance * original.avg_time, kMinToleranceSeconds);
}

inline Presence classify(const std::optional<SegmentStats>& original, const std::optional<SegmentStats>& simulated,
                         double tolerance) {
  if (!simulated) return Presence::OnlyOriginal;
  if (!original) return Presence::OnlySimulated;
  return std::abs(simulated->avg_time - original->avg_time) <= tolerance ? Presence::BothSimilar : Presence::BothDifferent;
}

// Without an explicit tolerance each shared segment uses default_tolerance.
inline std::vector<SpectrumDiffRecord> spectrum_diff(const EventLog& original, const EventLog& simulated,
                                                     std::optional<double> tolerance = std::nullopt) {
  if (tolerance && !(*tolerance >= 0)) throw Error("InvalidArgument", "tolerance must be >= 0");
  const auto a = spectrum(original);
  const auto b = spectrum(simulated);
  std::map<Segment, SpectrumDiffRecord> merged;
  for (const auto& [seg, s] : a) merged[seg].original = s;
  for (const auto& [seg, s] : b) merged[seg].simulated = s;

  std::vector<SpectrumDiffRecord> out;
  for (auto& [seg, r] : merged) {
    r.segment = seg;
    if (r.original && r.simulated) {
      r.avg_time_delta = r.simulated->avg_time - r.original->avg_time;
      r.freq_delta = static_cast<std::int64_t>(r.simulated->frequency) - static_cast<std::int64_t>(r.original->frequency);
    }
    r.tolerance = tolerance ? *tolerance : (r.original ? default_tolerance(*r.original) : kMinToleranceSeconds);
    r.presence = classify(r.original, r.simulated, r.tolerance);
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    const double dx = std::abs(x.avg_time_delta), dy = std::abs(y.avg_time_delta);
    if (dx != dy) return dx > dy;
    return segment_label(x.segment) < segment_label(y.segment);
  });
  return out;
}

inline nlohmann::json to_json(const SegmentStats& s) {
  return {{"segment", {s.segment.first, s.segment.second}}, {"frequency", s.frequency}, {"avg_time", s.avg_time}};
}

inline nlohmann::json to_json(const SpectrumDiffRecord& r) {
  return {{"segment", {r.segment.first, r.segment.second}},
          {"presence", presence_name(r.presence)},
          {"original", r.original ? to_json(*r.original) : nlohmann::json(nullptr)},
          {"simulated", r.simulated ? to_json(*r.simulated) : nlohmann::json(nullptr)},
          {"avg_time_delta", r.avg_time_delta},
          {"freq_delta", r.freq_delta},
          {"tolerance", r.tolerance}};
}

inline nlohmann::json to_json(const std::vector<SpectrumDiffRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

}  // namespace ptsim
