#include <gtest/gtest.h>

#include <sstream>

#include "mousetrail/trajectory.hpp"
#include "test_util.hpp"

namespace mt = mousetrail;

namespace {

std::vector<mt::Trajectory> parse_csv(const std::string& body, mt::ParseOptions opts = {}) {
  std::istringstream in(std::string(mt::kEventsHeader) + "\n" + body);
  return mt::parse_events_log(in, mt::LogFormat::Csv, opts);
}

mt::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const mt::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return mt::ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ParseEvents, SingleDragRow) {
  const auto ts = parse_csv("s1,q7,1555050000123,drag,412.5,310.0\n");
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].student().value, "s1");
  EXPECT_EQ(ts[0].question().value, "q7");
  ASSERT_EQ(ts[0].size(), 1u);
  const mt::MouseEvent expected{1555050000123, mt::EventKind::Drag, 412.5, 310.0};
  EXPECT_EQ(ts[0].events()[0], expected);
  EXPECT_EQ(ts[0].opened_at(), 1555050000123);
}

TEST(ParseEvents, UnknownKindIsRejected) {
  EXPECT_EQ(code_of([] { parse_csv("s1,q7,5,hover,1,1\n"); }), mt::ErrorCode::UnknownEventKind);
}

TEST(ParseEvents, EventsAreSortedByTimestamp) {
  const auto ts = parse_csv("s1,q1,5,move,1,1\ns1,q1,3,move,2,2\n");
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].events()[0].timestamp, 3);
  EXPECT_EQ(ts[0].events()[1].timestamp, 5);
}

TEST(ParseEvents, EqualTimestampsKeepFileOrder) {
  const auto ts = parse_csv("s1,q1,5,down,1,1\ns1,q1,5,drag,2,2\ns1,q1,5,up,3,3\n");
  ASSERT_EQ(ts[0].size(), 3u);
  EXPECT_EQ(ts[0].events()[0].kind, mt::EventKind::Down);
  EXPECT_EQ(ts[0].events()[1].kind, mt::EventKind::Drag);
  EXPECT_EQ(ts[0].events()[2].kind, mt::EventKind::Up);
}

TEST(ParseEvents, UnparseableTimestamp) {
  EXPECT_EQ(code_of([] { parse_csv("s1,q1,yesterday,move,1,1\n"); }), mt::ErrorCode::NonMonotoneTimestamps);
}

TEST(ParseEvents, MalformedRows) {
  EXPECT_EQ(code_of([] { parse_csv("s1,q1,5,move,1\n"); }), mt::ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([] { parse_csv("s1,q1,5,move,abc,1\n"); }), mt::ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([] { parse_csv(",q1,5,move,1,1\n"); }), mt::ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([] {
              std::istringstream in("student,question,t,kind,x,y\n");
              mt::parse_events_log(in, mt::LogFormat::Csv);
            }),
            mt::ErrorCode::MalformedRow);
}

TEST(ParseEvents, SplitsSessionsOnLongGaps) {
  mt::ParseOptions opts;
  opts.session_gap_ms = 1000;
  const auto ts = parse_csv("s1,q1,0,move,0,0\ns1,q1,1000,move,0,0\ns1,q1,2001,move,0,0\n", opts);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].size(), 2u);
  EXPECT_EQ(ts[1].opened_at(), 2001);
}

TEST(ParseEvents, GroupsByStudentAndQuestion) {
  const auto ts = parse_csv("s2,q1,1,move,0,0\ns1,q2,2,move,0,0\ns1,q1,3,move,0,0\ns1,q2,4,up,0,0\n");
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_EQ(ts[0].student().value, "s1");
  EXPECT_EQ(ts[0].question().value, "q1");
  EXPECT_EQ(ts[1].question().value, "q2");
  EXPECT_EQ(ts[1].size(), 2u);
  EXPECT_EQ(ts[2].student().value, "s2");
}

TEST(ParseEvents, Jsonl) {
  std::istringstream in(
      R"({"student_id":"s1","question_id":"q7","timestamp_ms":10,"event_kind":"down","x":1.5,"y":2})"
      "\n"
      R"({"student_id":"s1","question_id":"q7","timestamp_ms":4,"event_kind":"move","x":0,"y":0})"
      "\n");
  const auto ts = mt::parse_events_log(in, mt::LogFormat::Jsonl);
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].events()[0].timestamp, 4);
  EXPECT_EQ(ts[0].events()[1].kind, mt::EventKind::Down);
  EXPECT_EQ(ts[0].events()[1].x, 1.5);
}

TEST(ParseEvents, JsonlMissingKey) {
  std::istringstream in(R"({"student_id":"s1","question_id":"q7","event_kind":"down","x":1,"y":2})");
  EXPECT_EQ(code_of([&] { mt::parse_events_log(in, mt::LogFormat::Jsonl); }), mt::ErrorCode::MalformedRow);
}

TEST(ParseEvents, RoundTripIsIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rng = mt::make_rng(seed, "roundtrip");
    std::vector<mt::Trajectory> original;
    for (int s = 0; s < 3; ++s) {
      for (int q = 0; q < 3; ++q) {
        auto t = mt::testing::random_trajectory(rng, static_cast<std::size_t>(mt::uniform_int(rng, 1, 40)));
        original.emplace_back(mt::StudentId{"s" + std::to_string(s)}, mt::QuestionId{"q" + std::to_string(q)},
                              t.events());
      }
    }
    for (auto format : {mt::LogFormat::Csv, mt::LogFormat::Jsonl}) {
      std::stringstream buf;
      mt::write_events(buf, original, format);
      const auto parsed = mt::parse_events_log(buf, format);
      EXPECT_EQ(parsed, original);
      std::stringstream again;
      mt::write_events(again, parsed, format);
      EXPECT_EQ(again.str(), [&] {
        std::stringstream b;
        mt::write_events(b, original, format);
        return b.str();
      }());
    }
  }
}

TEST(ParseEvents, ShuffledRowsComeOutSorted) {
  auto rng = mt::make_rng(3, "shuffle");
  const auto t = mt::testing::random_trajectory(rng, 200);
  std::stringstream buf;
  mt::write_events(buf, {t});
  std::string header, line;
  std::getline(buf, header);
  std::vector<std::string> rows;
  while (std::getline(buf, line)) rows.push_back(line);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::string body;
  for (const auto& r : rows) body += r + "\n";
  const auto parsed = parse_csv(body);
  ASSERT_EQ(parsed.size(), 1u);
  for (std::size_t i = 1; i < parsed[0].size(); ++i) {
    EXPECT_LE(parsed[0].events()[i - 1].timestamp, parsed[0].events()[i].timestamp);
  }
}

TEST(Trajectory, RejectsEmptyAndUnsorted) {
  EXPECT_EQ(code_of([] { mt::Trajectory({"s"}, {"q"}, {}); }), mt::ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] {
              mt::Trajectory({"s"}, {"q"}, {{5, mt::EventKind::Move, 0, 0}, {3, mt::EventKind::Move, 0, 0}});
            }),
            mt::ErrorCode::NonMonotoneTimestamps);
}

TEST(ScoreClass, DefaultEdges) {
  const mt::ScoreClassBins bins;
  EXPECT_EQ(mt::map_score_to_class(0, bins), 0);
  EXPECT_EQ(mt::map_score_to_class(100, bins), 3);
  EXPECT_EQ(mt::map_score_to_class(60, bins), 2);
  EXPECT_EQ(mt::map_score_to_class(25, bins), 0);
  EXPECT_EQ(mt::map_score_to_class(26, bins), 1);
  EXPECT_EQ(mt::map_score_to_class(50, bins), 1);
  EXPECT_EQ(mt::map_score_to_class(75, bins), 2);
  EXPECT_EQ(mt::map_score_to_class(76, bins), 3);
}

TEST(ScoreClass, OutOfRange) {
  EXPECT_EQ(code_of([] { mt::map_score_to_class(-1, {}); }), mt::ErrorCode::OutOfRangeScore);
  EXPECT_EQ(code_of([] { mt::map_score_to_class(101, {}); }), mt::ErrorCode::OutOfRangeScore);
}

TEST(ScoreClass, InvalidEdges) {
  EXPECT_THROW(mt::ScoreClassBins({50, 50, 75}), mt::Error);
  EXPECT_THROW(mt::ScoreClassBins({-1, 50, 75}), mt::Error);
  EXPECT_THROW(mt::ScoreClassBins({10, 50, 100}), mt::Error);
}

TEST(ScoreClass, MonotoneAndSurjectiveForRandomBins) {
  auto rng = mt::make_rng(11, "bins");
  for (int trial = 0; trial < 500; ++trial) {
    std::array<int, 3> e{};
    do {
      for (auto& v : e) v = static_cast<int>(mt::uniform_int(rng, 0, 99));
      std::sort(e.begin(), e.end());
    } while (!(e[0] < e[1] && e[1] < e[2]));
    const mt::ScoreClassBins bins(e);
    std::array<bool, 4> seen{};
    int prev = 0;
    for (int s = 0; s <= 100; ++s) {
      const int c = mt::map_score_to_class(s, bins);
      ASSERT_GE(c, prev);
      prev = c;
      seen[static_cast<std::size_t>(c)] = true;
    }
    EXPECT_TRUE(seen[0] && seen[1] && seen[2] && seen[3]);
  }
}

TEST(ParseSubmissions, ComputesClassAndValidates) {
  std::istringstream in(std::string(mt::kSubmissionsHeader) + "\ns1,q1,100,1,60\ns1,q1,200,2,80\n");
  const auto recs = mt::parse_submissions(in, mt::LogFormat::Csv);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].score_class, 2);
  EXPECT_EQ(recs[1].attempt_index, 2);
  EXPECT_EQ(recs[1].score_class, 3);

  std::istringstream bad_attempt(std::string(mt::kSubmissionsHeader) + "\ns1,q1,100,3,60\n");
  EXPECT_EQ(code_of([&] { mt::parse_submissions(bad_attempt, mt::LogFormat::Csv); }), mt::ErrorCode::MalformedRow);
  std::istringstream bad_score(std::string(mt::kSubmissionsHeader) + "\ns1,q1,100,1,101\n");
  EXPECT_EQ(code_of([&] { mt::parse_submissions(bad_score, mt::LogFormat::Csv); }), mt::ErrorCode::OutOfRangeScore);
}

TEST(ParseQuestions, DifficultyRange) {
  std::istringstream ok(std::string(mt::kQuestionsHeader) + "\nq1,area,3,5\n");
  const auto qs = mt::parse_questions(ok, mt::LogFormat::Csv);
  ASSERT_EQ(qs.size(), 1u);
  EXPECT_EQ(qs[0].math_dimension, "area");
  std::istringstream bad(std::string(mt::kQuestionsHeader) + "\nq1,area,3,6\n");
  EXPECT_EQ(code_of([&] { mt::parse_questions(bad, mt::LogFormat::Csv); }), mt::ErrorCode::MalformedRow);
}

TEST(Association, EarliestSubmissionAtOrAfterLastEvent) {
  auto traj = [](const char* q, mt::TimestampMs a, mt::TimestampMs b) {
    return mt::Trajectory({"s1"}, {q}, {{a, mt::EventKind::Move, 0, 0}, {b, mt::EventKind::Move, 0, 0}});
  };
  const std::vector<mt::Trajectory> ts{traj("q1", 0, 100), traj("q1", 5000, 6000), traj("q2", 0, 10),
                                       traj("q3", 0, 500)};
  const std::vector<mt::SubmissionRecord> recs{
      {{"s1"}, {"q1"}, 100, 1, 50, 1},   // same millisecond as the last event
      {{"s1"}, {"q1"}, 7000, 2, 80, 3},  // second attempt
      {{"s1"}, {"q3"}, 400, 1, 10, 0},   // before the trajectory ends
      {{"s2"}, {"q1"}, 100, 1, 10, 0},   // other student
  };
  const auto owner = mt::associate_trajectories(ts, recs);
  EXPECT_EQ(owner[0], std::optional<std::size_t>(0));
  EXPECT_EQ(owner[1], std::optional<std::size_t>(1));
  EXPECT_FALSE(owner[2]);
  EXPECT_FALSE(owner[3]);
}

TEST(Association, LatestTrajectoryWinsForOneSubmission) {
  const std::vector<mt::Trajectory> ts{
      mt::Trajectory({"s1"}, {"q1"}, {{0, mt::EventKind::Move, 0, 0}}),
      mt::Trajectory({"s1"}, {"q1"}, {{50, mt::EventKind::Move, 0, 0}}),
  };
  const std::vector<mt::SubmissionRecord> recs{{{"s1"}, {"q1"}, 60, 1, 50, 1}};
  EXPECT_EQ(mt::associate_trajectories(ts, recs)[0], std::optional<std::size_t>(1));
}
