#pragma once

// Mouse interaction features: drag-and-drop segmentation and geometry, the
// think-time / first-attempt / first-drag set (TFF) and the drag statistical
// measurements (MDSM).

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mousetrail/changepoint.hpp"
#include "mousetrail/stats.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct DragAndDrop {
  std::size_t start_index = 0;  // the Down event
  std::size_t end_index = 0;    // the Up event
  std::vector<Point> points;
  TimestampMs start_time = 0;
  TimestampMs end_time = 0;
  double length = 0.0;  // D: polyline length
  double chord = 0.0;   // Delta: straight-line distance start to end
  double curvature = 0.0;  // K = Delta / D, 0 for a zero-length drag
  TimestampMs duration() const noexcept { return end_time - start_time; }
};

inline DragAndDrop make_drag_and_drop(const std::vector<MouseEvent>& ev, std::size_t down, std::size_t up) {
  DragAndDrop dd;
  dd.start_index = down;
  dd.end_index = up;
  dd.start_time = ev[down].timestamp;
  dd.end_time = ev[up].timestamp;
  dd.points.reserve(up - down + 1);
  for (std::size_t i = down; i <= up; ++i) dd.points.push_back({ev[i].x, ev[i].y});
  for (std::size_t i = 1; i < dd.points.size(); ++i) {
    dd.length += std::hypot(dd.points[i].x - dd.points[i - 1].x, dd.points[i].y - dd.points[i - 1].y);
  }
  const double chord = std::hypot(dd.points.back().x - dd.points.front().x,
                                  dd.points.back().y - dd.points.front().y);
  // Rounding can leave a collinear chord an ulp longer than the path.
  dd.chord = std::min(chord, dd.length);
  dd.curvature = dd.length > 0.0 ? dd.chord / dd.length : 0.0;
  return dd;
}

// Maximal runs of the form Down, Drag+, Up. Clicks without drags and
// unterminated gestures produce nothing.
inline std::vector<DragAndDrop> segment_drag_and_drops(const Trajectory& traj) {
  const auto& ev = traj.events();
  std::vector<DragAndDrop> out;
  std::size_t i = 0;
  while (i < ev.size()) {
    if (ev[i].kind != EventKind::Down) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < ev.size() && ev[j].kind == EventKind::Drag) ++j;
    if (j > i + 1 && j < ev.size() && ev[j].kind == EventKind::Up) {
      out.push_back(make_drag_and_drop(ev, i, j));
      i = j + 1;
    } else {
      i = j;
    }
  }
  return out;
}

inline constexpr std::size_t kTffFeatureCount = 13;
inline constexpr std::size_t kMdsmFeatureCount = 24;
inline constexpr std::size_t kMouseFeatureCount = kTffFeatureCount + kMdsmFeatureCount;

struct TffFeatures {
  double think_time_length_ms = kMissing;
  double think_time_percent = kMissing;
  double think_event_length = kMissing;
  double think_event_percent = kMissing;
  double first_attempt_event_end_index = kMissing;
  double fdd_time_length_ms = kMissing;
  double fdd_time_percent = kMissing;
  double fdd_event_start_index = kMissing;
  double fdd_event_percent = kMissing;
  double fdd_event_end_index = kMissing;
  double fdd_K = kMissing;
  double fdd_D = kMissing;
  double fdd_Delta = kMissing;

  std::array<double, kTffFeatureCount> values() const {
    return {think_time_length_ms, think_time_percent, think_event_length, think_event_percent,
            first_attempt_event_end_index, fdd_time_length_ms, fdd_time_percent, fdd_event_start_index,
            fdd_event_percent, fdd_event_end_index, fdd_K, fdd_D, fdd_Delta};
  }

  static const std::array<const char*, kTffFeatureCount>& names() {
    static const std::array<const char*, kTffFeatureCount> kNames = {
        "think_time_length_ms", "think_time_percent", "think_event_length", "think_event_percent",
        "first_attempt_event_end_index", "fdd_time_length_ms", "fdd_time_percent", "fdd_event_start_index",
        "fdd_event_percent", "fdd_event_end_index", "fdd_K", "fdd_D", "fdd_Delta"};
    return kNames;
  }
};

inline TffFeatures extract_tff(const Trajectory& traj, const ChangePoints& cps,
                               const std::vector<DragAndDrop>& dds) {
  TffFeatures f;
  const auto& ev = traj.events();
  const double n = static_cast<double>(ev.size());
  const double duration = static_cast<double>(traj.duration());

  if (cps.cp1) {
    const auto cp1 = *cps.cp1;
    f.think_time_length_ms = static_cast<double>(ev[cp1].timestamp - traj.opened_at());
    if (duration > 0) f.think_time_percent = f.think_time_length_ms / duration;
    f.think_event_length = static_cast<double>(cp1);
    f.think_event_percent = static_cast<double>(cp1) / n;
  }
  if (cps.cp2) f.first_attempt_event_end_index = static_cast<double>(*cps.cp2);

  if (!dds.empty()) {
    const auto& first = dds.front();
    // The first Drag follows the Down directly.
    f.fdd_time_length_ms = static_cast<double>(ev[first.start_index + 1].timestamp - traj.opened_at());
    if (duration > 0) f.fdd_time_percent = f.fdd_time_length_ms / duration;
    f.fdd_event_start_index = static_cast<double>(first.start_index);
    f.fdd_event_percent = static_cast<double>(first.start_index) / n;
    f.fdd_event_end_index = static_cast<double>(first.end_index);
    f.fdd_K = first.curvature;
    f.fdd_D = first.length;
    f.fdd_Delta = first.chord;
  }
  return f;
}

struct MdsmFeatures {
  stats::Summary K;
  stats::Summary D;
  stats::Summary T_drag;
  stats::Summary Delta;
  stats::Summary t_idle;  // gaps between consecutive events
  stats::Summary T_idle;  // gaps between consecutive drag-and-drops
  double dd_count = kMissing;
  double total_time_ms = kMissing;
  double total_events = kMissing;
  stats::Summary events_per_second;

  std::array<double, kMdsmFeatureCount> values() const {
    std::array<double, kMdsmFeatureCount> v{};
    std::size_t k = 0;
    for (const auto* s : {&K, &D, &T_drag, &Delta, &t_idle, &T_idle}) {
      v[k++] = s->median;
      v[k++] = s->mean;
      v[k++] = s->iqr;
    }
    v[k++] = dd_count;
    v[k++] = total_time_ms;
    v[k++] = total_events;
    v[k++] = events_per_second.mean;
    v[k++] = events_per_second.median;
    v[k++] = events_per_second.iqr;
    return v;
  }

  static const std::array<std::string, kMdsmFeatureCount>& names() {
    static const auto kNames = [] {
      std::array<std::string, kMdsmFeatureCount> n;
      std::size_t k = 0;
      for (const char* base : {"K", "D", "T_drag", "Delta", "t_idle", "T_idle"}) {
        for (const char* stat : {"median", "mean", "iqr"}) n[k++] = std::string(base) + "_" + stat;
      }
      for (const char* tail : {"dd_count", "total_time_ms", "total_events", "events_per_second_mean",
                               "events_per_second_median", "events_per_second_iqr"}) {
        n[k++] = tail;
      }
      return n;
    }();
    return kNames;
  }
};

inline MdsmFeatures extract_mdsm(const Trajectory& traj, const std::vector<DragAndDrop>& dds) {
  const auto& ev = traj.events();
  std::vector<double> k, d, t_drag, delta, t_idle, big_t_idle;
  for (std::size_t i = 0; i < dds.size(); ++i) {
    k.push_back(dds[i].curvature);
    d.push_back(dds[i].length);
    t_drag.push_back(static_cast<double>(dds[i].duration()));
    delta.push_back(dds[i].chord);
    if (i + 1 < dds.size()) big_t_idle.push_back(static_cast<double>(dds[i + 1].start_time - dds[i].end_time));
  }
  for (std::size_t i = 1; i < ev.size(); ++i) {
    t_idle.push_back(static_cast<double>(ev[i].timestamp - ev[i - 1].timestamp));
  }

  // Events per whole second since the question was opened, empty seconds included.
  const auto seconds = static_cast<std::size_t>(traj.duration() / 1000) + 1;
  std::vector<double> per_second(seconds, 0.0);
  for (const auto& e : ev) per_second[static_cast<std::size_t>((e.timestamp - traj.opened_at()) / 1000)] += 1.0;

  MdsmFeatures m;
  m.K = stats::summarize(k);
  m.D = stats::summarize(d);
  m.T_drag = stats::summarize(t_drag);
  m.Delta = stats::summarize(delta);
  m.t_idle = stats::summarize(t_idle);
  m.T_idle = stats::summarize(big_t_idle);
  m.dd_count = static_cast<double>(dds.size());
  m.total_time_ms = static_cast<double>(traj.duration());
  m.total_events = static_cast<double>(ev.size());
  m.events_per_second = stats::summarize(per_second);
  return m;
}

// Fixed 37-column layout: TFF fields, then MDSM fields.
inline std::vector<double> mouse_feature_vector(const TffFeatures& tff, const MdsmFeatures& mdsm) {
  std::vector<double> out;
  out.reserve(kMouseFeatureCount);
  for (double v : tff.values()) out.push_back(v);
  for (double v : mdsm.values()) out.push_back(v);
  return out;
}

inline const std::vector<std::string>& mouse_feature_names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> n;
    for (const char* s : TffFeatures::names()) n.emplace_back(s);
    for (const auto& s : MdsmFeatures::names()) n.push_back(s);
    return n;
  }();
  return kNames;
}

// Extracts the 37 mouse features of a trajectory. Trajectories shorter than
// the window have no change points.
inline std::vector<double> extract_mouse_features(const Trajectory& traj, const DensityParams& params) {
  const auto dds = segment_drag_and_drops(traj);
  ChangePoints cps;
  if (traj.size() >= static_cast<std::size_t>(params.window_size)) cps = detect_change_points(traj, params);
  return mouse_feature_vector(extract_tff(traj, cps, dds), extract_mdsm(traj, dds));
}

}  // namespace mousetrail
