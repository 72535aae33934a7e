#pragma once

// Sliding-window drag-density change points that split a trajectory into
// think time, first attempt and following actions.

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "mousetrail/error.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

struct DensityParams {
  int window_size = 10;
  // Empty means "auto": use the whole-trajectory drag density.
  std::optional<double> threshold;

  void validate() const {
    if (window_size < 2) throw Error(ErrorCode::InvalidArgument, "window size must be >= 2");
    if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "density threshold must be within [0,1]");
    }
  }
};

struct ChangePoints {
  std::optional<std::size_t> cp1;
  std::optional<std::size_t> cp2;

  friend bool operator==(const ChangePoints&, const ChangePoints&) = default;
};

inline double drag_density(std::size_t drags, std::size_t total) {
  return static_cast<double>(drags) / static_cast<double>(total);
}

// Fraction of drag events in the slice.
inline double window_drag_density(std::span<const MouseEvent> events) {
  if (events.empty()) throw Error(ErrorCode::EmptyWindow, "density of an empty window");
  std::size_t drags = 0;
  for (const auto& e : events) drags += e.kind == EventKind::Drag;
  return drag_density(drags, events.size());
}

inline double resolve_threshold(const Trajectory& traj, const DensityParams& params) {
  return params.threshold ? *params.threshold : window_drag_density(traj.events());
}

// cp1 is the first event of the first window whose density is strictly above
// the threshold; scanning on from the next window, cp2 is the last event of the
// first window strictly below it (or the final event if density never drops).
inline ChangePoints detect_change_points(const Trajectory& traj, const DensityParams& params) {
  params.validate();
  const auto& ev = traj.events();
  const auto w = static_cast<std::size_t>(params.window_size);
  if (ev.size() < w) {
    throw Error(ErrorCode::TrajectoryTooShort, std::to_string(ev.size()) + " events, window " +
                                                   std::to_string(w));
  }
  const double threshold = resolve_threshold(traj, params);
  const std::size_t windows = ev.size() - w + 1;

  std::size_t drags = 0;
  for (std::size_t i = 0; i < w; ++i) drags += ev[i].kind == EventKind::Drag;

  ChangePoints cps;
  std::size_t start = 0;
  for (;; ++start) {
    if (drag_density(drags, w) > threshold) {
      cps.cp1 = start;
      break;
    }
    if (start + 1 == windows) return cps;
    drags += (ev[start + w].kind == EventKind::Drag) - (ev[start].kind == EventKind::Drag);
  }

  while (start + 1 < windows) {
    drags += (ev[start + w].kind == EventKind::Drag) - (ev[start].kind == EventKind::Drag);
    ++start;
    if (drag_density(drags, w) < threshold) {
      cps.cp2 = start + w - 1;
      return cps;
    }
  }
  cps.cp2 = ev.size() - 1;
  return cps;
}

struct Stages {
  std::span<const MouseEvent> think;
  std::span<const MouseEvent> first_attempt;
  std::span<const MouseEvent> following;
};

inline Stages segment_stages(const Trajectory& traj, const ChangePoints& cps) {
  const std::span<const MouseEvent> all(traj.events());
  if (!cps.cp1) {
    if (cps.cp2) throw Error(ErrorCode::InconsistentIndices, "cp2 present without cp1");
    return {all, all.subspan(all.size()), all.subspan(all.size())};
  }
  const std::size_t cp1 = *cps.cp1;
  const std::size_t cp2 = cps.cp2 ? *cps.cp2 : all.size() - 1;
  if (!(cp1 < cp2 && cp2 < all.size())) {
    throw Error(ErrorCode::InconsistentIndices,
                "cp1=" + std::to_string(cp1) + " cp2=" + std::to_string(cp2) + " n=" + std::to_string(all.size()));
  }
  return {all.first(cp1), all.subspan(cp1, cp2 - cp1 + 1), all.subspan(cp2 + 1)};
}

}  // namespace mousetrail
