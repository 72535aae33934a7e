#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mousetrail/rng.hpp"
#include "mousetrail/statistical_features.hpp"

namespace mt = mousetrail;

namespace {

const std::vector<mt::QuestionMeta> kMetas = {
    {{"q1"}, "area", 3, 1},
    {{"q2"}, "area", 3, 2},
    {{"q3"}, "number", 4, 1},
    {{"q4"}, "number", 4, 2},
};

mt::SubmissionRecord rec(const char* s, const char* q, mt::TimestampMs t, int score, int attempt = 1) {
  return {{s}, {q}, t, attempt, score, std::min(3, score / 25)};
}

double population_std(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

bool all_missing(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == mt::kMissing; });
}

}  // namespace

TEST(Schema, CellLayout) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  EXPECT_EQ(schema.dimensions, (std::vector<std::string>{"area", "number"}));
  EXPECT_EQ(schema.cell_count(), 8u);
  EXPECT_EQ(schema.cell_index(kMetas[3]), 1 * 4 + 1 * 2 + 1u);
  EXPECT_EQ(schema.cell_labels().size(), schema.cell_count());
  EXPECT_THROW(schema.cell_index({{"x"}, "volume", 3, 1}), mt::Error);
}

TEST(QuestionStats, Proportions) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs;
  const int per_class[4] = {2, 3, 4, 1};
  int t = 0;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < per_class[c]; ++i) rs.push_back(rec("s", "q1", ++t, c * 25 + 5));
  }
  const auto s = mt::compute_question_stats(rs, kMetas[0], 1000, schema);
  EXPECT_EQ(s.total_submissions, 10);
  EXPECT_DOUBLE_EQ(s.pct_per_class[0], 0.2);
  EXPECT_DOUBLE_EQ(s.pct_per_class[1], 0.3);
  EXPECT_DOUBLE_EQ(s.pct_per_class[2], 0.4);
  EXPECT_DOUBLE_EQ(s.pct_per_class[3], 0.1);
  EXPECT_EQ(s.dimension_one_hot, (std::vector<double>{1, 0}));
  EXPECT_EQ(s.grade, 3);
  EXPECT_EQ(s.difficulty, 1);
  EXPECT_EQ(s.values().size(), mt::QuestionStats::names(schema).size());
}

TEST(QuestionStats, EmptyHistory) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", 500, 90), rec("s", "q2", 10, 90)};
  const auto s = mt::compute_question_stats(rs, kMetas[0], 500, schema);
  EXPECT_EQ(s.total_submissions, 0);
  EXPECT_EQ(s.second_submissions, 0);
  for (double p : s.pct_per_class) EXPECT_EQ(p, mt::kMissing);
}

TEST(QuestionStats, SecondSubmissions) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("a", "q1", 1, 10),    rec("a", "q1", 2, 40, 2), rec("b", "q1", 3, 60),
                                       rec("b", "q1", 4, 80, 2), rec("c", "q1", 5, 90)};
  const auto s = mt::compute_question_stats(rs, kMetas[0], 100, schema);
  EXPECT_EQ(s.total_submissions, 5);
  EXPECT_EQ(s.second_submissions, 2);
}

TEST(StudentStats, FirstAverageAndProportions) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  const auto catalog = mt::make_catalog(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", 1, 60), rec("s", "q1", 2, 80), rec("s", "q1", 3, 100, 2),
                                       rec("s", "q4", 4, 30)};
  const auto s = mt::compute_student_stats(rs, catalog, 100, schema);
  const auto c1 = schema.cell_index(kMetas[0]);
  const auto c4 = schema.cell_index(kMetas[3]);
  EXPECT_EQ(s.total_submissions, 4);
  EXPECT_EQ(s.second_submissions, 1);
  EXPECT_DOUBLE_EQ(s.first_avg_score_per_cell[c1], 70.0);
  EXPECT_DOUBLE_EQ(s.pct_per_cell[c1], 0.75);
  EXPECT_DOUBLE_EQ(s.pct_per_cell[c4], 0.25);
  for (std::size_t c = 0; c < schema.cell_count(); ++c) {
    if (c != c1 && c != c4) {
      EXPECT_EQ(s.pct_per_cell[c], mt::kMissing);
      EXPECT_EQ(s.first_avg_score_per_cell[c], mt::kMissing);
    }
  }
}

TEST(StudentStats, NoHistory) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  const auto s = mt::compute_student_stats({}, mt::make_catalog(kMetas), 100, schema);
  EXPECT_EQ(s.total_submissions, 0);
  EXPECT_EQ(s.second_submissions, 0);
  EXPECT_TRUE(all_missing(s.pct_per_cell));
  EXPECT_TRUE(all_missing(s.first_avg_score_per_cell));
  EXPECT_EQ(s.values().size(), mt::StudentStats::names(schema).size());
}

TEST(RecentStats, EmptyWindow) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", 0, 80)};
  const auto s = mt::compute_recent_stats(rs, mt::make_catalog(kMetas), 20 * mt::kMsPerDay, 14, schema);
  EXPECT_TRUE(all_missing(s.values()));
  EXPECT_EQ(s.values().size(), mt::RecentStats::names(schema).size());
}

TEST(RecentStats, SingleRecord) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", mt::kMsPerDay, 80)};
  const auto s = mt::compute_recent_stats(rs, mt::make_catalog(kMetas), 2 * mt::kMsPerDay, 14, schema);
  EXPECT_EQ(s.count_per_dimension, (std::vector<double>{1, 0}));
  EXPECT_EQ(s.avg_per_dimension[0], 80);
  EXPECT_EQ(s.std_per_dimension[0], 0);
  EXPECT_EQ(s.avg_per_dimension[1], mt::kMissing);
  EXPECT_EQ(s.std_per_dimension[1], mt::kMissing);
}

TEST(RecentStats, PopulationStd) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", 10, 60), rec("t", "q1", 20, 100)};
  const auto s = mt::compute_recent_stats(rs, mt::make_catalog(kMetas), 30, 14, schema);
  const auto gd = schema.grade_difficulty_index(kMetas[0]);
  EXPECT_DOUBLE_EQ(s.avg_per_grade_difficulty[gd], 80.0);
  EXPECT_DOUBLE_EQ(s.std_per_grade_difficulty[gd], population_std({60, 100}));
  EXPECT_DOUBLE_EQ(s.std_per_grade_difficulty[gd], 20.0);
}

TEST(RecentStats, WindowBounds) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  const mt::TimestampMs as_of = 30 * mt::kMsPerDay;
  const mt::TimestampMs from = as_of - 14 * mt::kMsPerDay;
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", from - 1, 10), rec("s", "q1", from, 20),
                                       rec("s", "q1", as_of - 1, 30), rec("s", "q1", as_of, 40)};
  const auto s = mt::compute_recent_stats(rs, mt::make_catalog(kMetas), as_of, 14, schema);
  EXPECT_EQ(s.count_per_dimension[0], 2);
  EXPECT_DOUBLE_EQ(s.avg_per_dimension[0], 25.0);
}

TEST(RecentStats, ZeroDayWindowIsAllMissing) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  std::vector<mt::SubmissionRecord> rs{rec("s", "q1", 99, 10), rec("s", "q2", 100, 20)};
  EXPECT_TRUE(all_missing(mt::compute_recent_stats(rs, mt::make_catalog(kMetas), 100, 0, schema).values()));
}

namespace {

std::vector<mt::SubmissionRecord> random_history(mt::Rng& rng, std::size_t n) {
  std::vector<mt::SubmissionRecord> rs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = kMetas[static_cast<std::size_t>(mt::uniform_int(rng, 0, 3))];
    const int score = static_cast<int>(mt::uniform_int(rng, 0, 100));
    rs.push_back({{"s" + std::to_string(mt::uniform_int(rng, 0, 4))},
                  m.question,
                  mt::uniform_int(rng, 0, 40 * mt::kMsPerDay),
                  mt::uniform01(rng) < 0.2 ? 2 : 1,
                  score,
                  std::min(3, score / 25)});
  }
  return rs;
}

}  // namespace

TEST(StatisticalFeatures, FutureRecordsDoNotLeak) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  const auto catalog = mt::make_catalog(kMetas);
  auto rng = mt::make_rng(17, "leakage");
  for (int trial = 0; trial < 100; ++trial) {
    auto rs = random_history(rng, 40);
    const mt::TimestampMs cutoff = mt::uniform_int(rng, 5 * mt::kMsPerDay, 35 * mt::kMsPerDay);
    const auto q = mt::compute_question_stats(rs, kMetas[1], cutoff, schema).values();
    const auto s = mt::compute_student_stats(rs, catalog, cutoff, schema).values();
    const auto r = mt::compute_recent_stats(rs, catalog, cutoff, 14, schema).values();
    for (int extra = 0; extra < 5; ++extra) {
      auto future = rec("s0", kMetas[static_cast<std::size_t>(extra % 4)].question.value.c_str(),
                        cutoff + mt::uniform_int(rng, 0, mt::kMsPerDay), 50, 1 + extra % 2);
      rs.insert(rs.begin() + static_cast<std::ptrdiff_t>(mt::uniform_int(rng, 0, static_cast<std::int64_t>(rs.size()))),
                future);
    }
    EXPECT_EQ(mt::compute_question_stats(rs, kMetas[1], cutoff, schema).values(), q);
    EXPECT_EQ(mt::compute_student_stats(rs, catalog, cutoff, schema).values(), s);
    EXPECT_EQ(mt::compute_recent_stats(rs, catalog, cutoff, 14, schema).values(), r);
  }
}

TEST(StatisticalFeatures, ProportionsSumToOneOrAreMissing) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  const auto catalog = mt::make_catalog(kMetas);
  auto rng = mt::make_rng(23, "proportions");
  auto check = [](const auto& values) {
    double sum = 0;
    bool any = false, missing = false;
    for (double v : values) {
      if (v == mt::kMissing) {
        missing = true;
        continue;
      }
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
      any = true;
    }
    if (any) {
      EXPECT_NEAR(sum, 1.0, 1e-9);
    } else {
      EXPECT_TRUE(missing);
    }
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto rs = random_history(rng, static_cast<std::size_t>(mt::uniform_int(rng, 0, 30)));
    const mt::TimestampMs cutoff = mt::uniform_int(rng, 0, 40 * mt::kMsPerDay);
    for (const auto& m : kMetas) check(mt::compute_question_stats(rs, m, cutoff, schema).pct_per_class);
    check(mt::compute_student_stats(rs, catalog, cutoff, schema).pct_per_cell);
  }
}

TEST(RecentStats, StdMatchesOracle) {
  const auto schema = mt::FeatureSchema::from_questions(kMetas);
  const auto catalog = mt::make_catalog(kMetas);
  auto rng = mt::make_rng(31, "recent-std");
  for (int trial = 0; trial < 100; ++trial) {
    const auto rs = random_history(rng, 30);
    const mt::TimestampMs as_of = mt::uniform_int(rng, 10 * mt::kMsPerDay, 40 * mt::kMsPerDay);
    const auto s = mt::compute_recent_stats(rs, catalog, as_of, 14, schema);
    for (std::size_t d = 0; d < schema.dimensions.size(); ++d) {
      std::vector<double> scores;
      for (const auto& r : rs) {
        if (r.submitted_at >= as_of - 14 * mt::kMsPerDay && r.submitted_at < as_of &&
            catalog.at(r.question).math_dimension == schema.dimensions[d]) {
          scores.push_back(r.raw_score);
        }
      }
      if (scores.empty()) {
        EXPECT_EQ(s.std_per_dimension[d], mt::kMissing);
      } else {
        EXPECT_NEAR(s.std_per_dimension[d], population_std(scores), 1e-9);
        EXPECT_EQ(s.count_per_dimension[d], static_cast<double>(scores.size()));
      }
    }
  }
}
