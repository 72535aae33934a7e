#include <gtest/gtest.h>

#include <cmath>

#include "mousetrail/interaction_features.hpp"
#include "mousetrail/stats.hpp"
#include "test_util.hpp"

namespace mt = mousetrail;
using mt::EventKind;

namespace {

mt::Trajectory make(std::vector<mt::MouseEvent> ev) { return mt::Trajectory({"s"}, {"q"}, std::move(ev)); }

// Independent type-7 quantile: position (n-1)p between order statistics.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const double below = std::floor(pos);
  const double above = std::ceil(pos);
  const double lo = v[static_cast<std::size_t>(below)];
  const double hi = v[static_cast<std::size_t>(above)];
  return lo * (1 - (pos - below)) + hi * (pos - below);
}

double polyline(const std::vector<mt::Point>& pts) {
  double d = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double dx = pts[i + 1].x - pts[i].x, dy = pts[i + 1].y - pts[i].y;
    d += std::sqrt(dx * dx + dy * dy);
  }
  return d;
}

}  // namespace

TEST(Stats, QuantileMatchesOracle) {
  auto rng = mt::make_rng(1, "quantile");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(mt::uniform_int(rng, 1, 30)));
    for (auto& x : v) x = std::round(mt::uniform(rng, -100, 100));
    for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
      EXPECT_NEAR(mt::stats::quantile(v, p), oracle_quantile(v, p), 1e-12);
    }
  }
}

TEST(Stats, EmptyListsAreMissing) {
  const std::vector<double> none;
  EXPECT_EQ(mt::stats::mean(none), mt::kMissing);
  EXPECT_EQ(mt::stats::median(none), mt::kMissing);
  EXPECT_EQ(mt::stats::iqr(none), mt::kMissing);
  EXPECT_EQ(mt::stats::population_stddev(none), mt::kMissing);
}

TEST(Stats, ConstantListSummary) {
  for (double c : {0.1, 7.0, -3.3, 1e9 + 0.5}) {
    const std::vector<double> v(13, c);
    const auto s = mt::stats::summarize(v);
    EXPECT_EQ(s.median, c);
    EXPECT_EQ(s.mean, c);
    EXPECT_EQ(s.iqr, 0.0);
  }
}

TEST(DragAndDrop, RightAngleGesture) {
  const auto t = make({{0, EventKind::Move, 9, 9},
                       {10, EventKind::Down, 0, 0},
                       {20, EventKind::Drag, 3, 0},
                       {30, EventKind::Drag, 3, 4},
                       {40, EventKind::Up, 3, 4},
                       {50, EventKind::Move, 9, 9}});
  const auto dds = mt::segment_drag_and_drops(t);
  ASSERT_EQ(dds.size(), 1u);
  EXPECT_EQ(dds[0].start_index, 1u);
  EXPECT_EQ(dds[0].end_index, 4u);
  EXPECT_DOUBLE_EQ(dds[0].length, 7.0);
  EXPECT_DOUBLE_EQ(dds[0].chord, 5.0);
  EXPECT_NEAR(dds[0].curvature, 0.714286, 1e-6);
  EXPECT_EQ(dds[0].duration(), 30);
}

TEST(DragAndDrop, ClickWithoutDragIsNotAGesture) {
  const auto t = make({{0, EventKind::Down, 0, 0}, {10, EventKind::Up, 0, 0}});
  EXPECT_TRUE(mt::segment_drag_and_drops(t).empty());
}

TEST(DragAndDrop, StraightDrag) {
  const auto t = make({{0, EventKind::Down, 0, 0}, {10, EventKind::Drag, 5, 0}, {20, EventKind::Up, 5, 0}});
  const auto dds = mt::segment_drag_and_drops(t);
  ASSERT_EQ(dds.size(), 1u);
  EXPECT_DOUBLE_EQ(dds[0].length, 5.0);
  EXPECT_DOUBLE_EQ(dds[0].chord, 5.0);
  EXPECT_DOUBLE_EQ(dds[0].curvature, 1.0);
}

TEST(DragAndDrop, ZeroLengthDragHasZeroCurvature) {
  const auto t = make({{0, EventKind::Down, 1, 1}, {10, EventKind::Drag, 1, 1}, {20, EventKind::Up, 1, 1}});
  const auto dds = mt::segment_drag_and_drops(t);
  ASSERT_EQ(dds.size(), 1u);
  EXPECT_EQ(dds[0].length, 0.0);
  EXPECT_EQ(dds[0].curvature, 0.0);
}

TEST(DragAndDrop, UnterminatedAndInterruptedGestures) {
  // Down Drag Move Up, Down Drag (end), Down Down Drag Up.
  const auto t = mt::testing::from_kinds("ODMUODOODU");
  const auto dds = mt::segment_drag_and_drops(t);
  ASSERT_EQ(dds.size(), 1u);
  EXPECT_EQ(dds[0].start_index, 7u);
  EXPECT_EQ(dds[0].end_index, 9u);
}

TEST(DragAndDrop, GeometryInvariantsOnRandomGestures) {
  auto rng = mt::make_rng(77, "geometry");
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<mt::MouseEvent> ev;
    const auto drags = mt::uniform_int(rng, 1, 12);
    ev.push_back({0, EventKind::Down, mt::uniform(rng, -1e3, 1e3), mt::uniform(rng, -1e3, 1e3)});
    for (std::int64_t k = 0; k < drags; ++k) {
      ev.push_back({k + 1, EventKind::Drag, mt::uniform(rng, -1e3, 1e3), mt::uniform(rng, -1e3, 1e3)});
    }
    ev.push_back({drags + 1, EventKind::Up, ev.back().x, ev.back().y});
    const auto dd = mt::segment_drag_and_drops(make(ev)).at(0);
    EXPECT_LE(dd.chord, dd.length);
    EXPECT_GE(dd.curvature, 0.0);
    EXPECT_LE(dd.curvature, 1.0);
    EXPECT_NEAR(dd.length, polyline(dd.points), 1e-9 * (1 + dd.length));

    const double ox = mt::uniform(rng, -1e4, 1e4), oy = mt::uniform(rng, -1e4, 1e4);
    auto shifted = ev;
    for (auto& e : shifted) {
      e.x += ox;
      e.y += oy;
    }
    const auto sd = mt::segment_drag_and_drops(make(shifted)).at(0);
    EXPECT_NEAR(sd.length, dd.length, 1e-9 * (1 + dd.length));
    EXPECT_NEAR(sd.chord, dd.chord, 1e-9 * (1 + dd.chord));
    EXPECT_NEAR(sd.curvature, dd.curvature, 1e-9);
  }
}

TEST(Tff, AllMissingWithoutChangePointsOrDrags) {
  const auto t = mt::testing::from_kinds("MMMM");
  const auto f = mt::extract_tff(t, {}, {});
  for (double v : f.values()) EXPECT_EQ(v, mt::kMissing);
}

TEST(Tff, ThinkTimeArithmetic) {
  std::vector<mt::MouseEvent> ev;
  const mt::TimestampMs times[] = {0, 1000, 3000, 5000, 6000, 7000, 8000, 9000, 9500, 10000, 10500, 11000};
  for (auto t : times) ev.push_back({1'000'000 + t, EventKind::Move, 0, 0});
  const auto traj = make(ev);
  const auto f = mt::extract_tff(traj, {3, 10}, {});
  EXPECT_EQ(f.think_time_length_ms, 5000.0);
  EXPECT_NEAR(f.think_time_percent, 5000.0 / 11000.0, 1e-12);
  EXPECT_EQ(f.think_event_length, 3.0);
  EXPECT_EQ(f.think_event_percent, 0.25);
  EXPECT_EQ(f.first_attempt_event_end_index, 10.0);
  EXPECT_EQ(f.fdd_K, mt::kMissing);
}

TEST(Tff, FirstDragAndDropFields) {
  const auto traj = mt::testing::from_kinds("MMMMODDUMMODU", 500);
  const auto dds = mt::segment_drag_and_drops(traj);
  ASSERT_EQ(dds.size(), 2u);
  const auto f = mt::extract_tff(traj, {}, dds);
  EXPECT_EQ(f.fdd_event_start_index, 4.0);
  EXPECT_EQ(f.fdd_event_end_index, 7.0);
  EXPECT_EQ(f.fdd_time_length_ms, 500.0);  // first Drag at index 5
  EXPECT_NEAR(f.fdd_time_percent, 500.0 / 1200.0, 1e-12);
  EXPECT_NEAR(f.fdd_event_percent, 4.0 / 13.0, 1e-12);
  EXPECT_DOUBLE_EQ(f.fdd_D, dds[0].length);
  EXPECT_DOUBLE_EQ(f.fdd_Delta, dds[0].chord);
  EXPECT_DOUBLE_EQ(f.fdd_K, dds[0].curvature);
  EXPECT_EQ(f.think_time_length_ms, mt::kMissing);
}

TEST(Tff, ZeroDurationLeavesPercentsMissing) {
  const auto traj = make({{5, EventKind::Down, 0, 0}, {5, EventKind::Drag, 1, 0}, {5, EventKind::Up, 1, 0}});
  const auto f = mt::extract_tff(traj, {}, mt::segment_drag_and_drops(traj));
  EXPECT_EQ(f.fdd_time_length_ms, 0.0);
  EXPECT_EQ(f.fdd_time_percent, mt::kMissing);
}

TEST(Tff, PercentsStayInRange) {
  auto rng = mt::make_rng(4, "tff-range");
  for (int trial = 0; trial < 500; ++trial) {
    const auto t = mt::testing::random_trajectory(rng, static_cast<std::size_t>(mt::uniform_int(rng, 10, 150)));
    const auto f = mt::extract_tff(t, mt::detect_change_points(t, {10, std::nullopt}), mt::segment_drag_and_drops(t));
    for (double p : {f.think_event_percent, f.fdd_event_percent, f.think_time_percent, f.fdd_time_percent}) {
      if (p != mt::kMissing) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
      }
    }
    if (f.think_event_length != mt::kMissing) {
      EXPECT_LE(f.think_event_length, static_cast<double>(t.size()));
    }
  }
}

TEST(Mdsm, TwoDragLengths) {
  // Drags of length 4 and 6.
  const auto traj = make({{0, EventKind::Down, 0, 0},
                          {10, EventKind::Drag, 4, 0},
                          {20, EventKind::Up, 4, 0},
                          {120, EventKind::Down, 0, 0},
                          {130, EventKind::Drag, 0, 6},
                          {150, EventKind::Up, 0, 6}});
  const auto m = mt::extract_mdsm(traj, mt::segment_drag_and_drops(traj));
  EXPECT_DOUBLE_EQ(m.D.median, 5.0);
  EXPECT_DOUBLE_EQ(m.D.mean, 5.0);
  EXPECT_DOUBLE_EQ(m.D.iqr, 1.0);
  EXPECT_DOUBLE_EQ(m.T_idle.mean, 100.0);
  EXPECT_DOUBLE_EQ(m.T_drag.median, 25.0);
  EXPECT_EQ(m.dd_count, 2.0);
}

TEST(Mdsm, SingleDragHasNoIdleInterval) {
  const auto traj = mt::testing::from_kinds("MODUM");
  const auto m = mt::extract_mdsm(traj, mt::segment_drag_and_drops(traj));
  EXPECT_EQ(m.T_idle.median, mt::kMissing);
  EXPECT_EQ(m.T_idle.mean, mt::kMissing);
  EXPECT_EQ(m.T_idle.iqr, mt::kMissing);
  EXPECT_EQ(m.dd_count, 1.0);
}

TEST(Mdsm, EventGaps) {
  const auto traj = make({{0, EventKind::Move, 0, 0}, {100, EventKind::Move, 0, 0}, {200, EventKind::Move, 0, 0}});
  const auto m = mt::extract_mdsm(traj, {});
  EXPECT_EQ(m.t_idle.mean, 100.0);
  EXPECT_EQ(m.t_idle.iqr, 0.0);
  EXPECT_EQ(m.total_time_ms, 200.0);
  EXPECT_EQ(m.total_events, 3.0);
  EXPECT_EQ(m.K.mean, mt::kMissing);
  EXPECT_EQ(m.dd_count, 0.0);
}

TEST(Mdsm, EventsPerSecondIncludesEmptySeconds) {
  const auto traj = make({{0, EventKind::Move, 0, 0}, {500, EventKind::Move, 0, 0}, {2500, EventKind::Move, 0, 0}});
  const auto m = mt::extract_mdsm(traj, {});
  // buckets [2, 0, 1]
  EXPECT_DOUBLE_EQ(m.events_per_second.mean, 1.0);
  EXPECT_DOUBLE_EQ(m.events_per_second.median, 1.0);
  EXPECT_DOUBLE_EQ(m.events_per_second.iqr, 1.0);
}

TEST(MouseVector, AllMissingInputs) {
  const auto v = mt::mouse_feature_vector(mt::TffFeatures{}, mt::MdsmFeatures{});
  ASSERT_EQ(v.size(), mt::kMouseFeatureCount);
  for (double x : v) EXPECT_EQ(x, mt::kMissing);
}

TEST(MouseVector, FixedLayoutAndDeterminism) {
  auto rng = mt::make_rng(8, "vector");
  EXPECT_EQ(mt::mouse_feature_names().size(), 37u);
  EXPECT_EQ(mt::mouse_feature_names().front(), "think_time_length_ms");
  EXPECT_EQ(mt::mouse_feature_names()[13], "K_median");
  EXPECT_EQ(mt::mouse_feature_names().back(), "events_per_second_iqr");
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = mt::testing::random_trajectory(rng, static_cast<std::size_t>(mt::uniform_int(rng, 1, 100)));
    const auto a = mt::extract_mouse_features(t, {});
    const auto b = mt::extract_mouse_features(t, {});
    ASSERT_EQ(a.size(), 37u);
    EXPECT_EQ(a, b);
  }
}
