#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "mousetrail/dataset.hpp"
#include "mousetrail/rng.hpp"

namespace mt = mousetrail;

namespace {

struct Fixture {
  std::vector<mt::QuestionMeta> metas{
      {{"q1"}, "area", 3, 1},
      {{"q2"}, "area", 3, 2},
      {{"q3"}, "number", 4, 1},
  };
  mt::QuestionCatalog catalog = mt::make_catalog(metas);
  mt::FeatureSchema schema = mt::FeatureSchema::from_questions(metas);
  // clang-format off
  mt::SimilarityMatrix matrix{{{"q1"}, {"q2"}, {"q3"}},
                              {1.0, 0.9,  0.5,
                               0.9, 1.0,  0.85,
                               0.5, 0.85, 1.0}};
  // clang-format on
  std::vector<mt::SubmissionRecord> records;
  std::vector<mt::MouseFeatureRow> rows;

  void add(const char* s, const char* q, mt::TimestampMs t, int score, int attempt = 1) {
    const int cls = std::min(3, score / 25);
    records.push_back({{s}, {q}, t, attempt, score, cls});
    rows.push_back({{s}, {q}, t, attempt, score, cls, std::vector<double>(mt::kMouseFeatureCount, t / 100.0)});
  }

  Fixture() {
    add("a", "q1", 100, 60);
    add("a", "q2", 2000, 80);
    add("a", "q2", 2500, 95, 2);
    add("a", "q3", 3000, 40);
    add("b", "q3", 100, 30);
    add("b", "q1", 2000, 70);
    add("c", "q2", 2000, 20);
  }

  mt::AssemblyInputs inputs() const { return {records, catalog, schema, 1000, 14, matrix, rows, 0.8}; }
};

std::vector<mt::LabeledExample> labeled(const std::vector<int>& counts, std::size_t dims, mt::Rng& rng) {
  std::vector<mt::LabeledExample> out;
  for (int c = 0; c < static_cast<int>(counts.size()); ++c) {
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
      mt::LabeledExample e;
      e.key = {{"s" + std::to_string(out.size())}, {"q"}, static_cast<mt::TimestampMs>(out.size())};
      e.label = c;
      for (std::size_t d = 0; d < dims; ++d) e.features.push_back(mt::uniform(rng, -5, 5) + c);
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<int> class_counts(const std::vector<mt::LabeledExample>& v) {
  std::vector<int> n(mt::kNumClasses, 0);
  for (const auto& e : v) ++n[static_cast<std::size_t>(e.label)];
  return n;
}

}  // namespace

TEST(Assemble, SelectsRecordsWithASimilarSolvedQuestion) {
  const Fixture f;
  const auto [base, prop] = mt::assemble_datasets(f.inputs());
  ASSERT_EQ(base.examples.size(), 2u);
  EXPECT_EQ(base.examples[0].key, (mt::ExampleKey{{"a"}, {"q2"}, 2000}));
  EXPECT_EQ(base.examples[1].key, (mt::ExampleKey{{"a"}, {"q3"}, 3000}));
  ASSERT_EQ(prop.examples.size(), 2u);

  const auto& first = prop.examples[0];
  EXPECT_EQ(first.features[first.features.size() - 1], 0.9);
  EXPECT_EQ(first.features[first.features.size() - 2], 2);  // a's class on q1
  EXPECT_EQ(first.features[first.features.size() - 3], 1.0);  // q1 mouse row filled with 100/100

  const auto& second = prop.examples[1];
  EXPECT_EQ(second.features.back(), 0.85);
  EXPECT_EQ(second.label, 1);
}

TEST(Assemble, ProposedExtendsBaselineBy39) {
  const Fixture f;
  const auto [base, prop] = mt::assemble_datasets(f.inputs());
  EXPECT_EQ(mt::kSimilarBlockSize, 39u);
  EXPECT_EQ(prop.feature_names.size(), base.feature_names.size() + 39);
  for (std::size_t i = 0; i < base.examples.size(); ++i) {
    const auto& b = base.examples[i].features;
    const auto& p = prop.examples[i].features;
    ASSERT_EQ(b.size(), base.feature_names.size());
    ASSERT_EQ(p.size(), b.size() + 39);
    EXPECT_TRUE(std::equal(b.begin(), b.end(), p.begin()));
    EXPECT_EQ(base.examples[i].key, prop.examples[i].key);
    EXPECT_EQ(base.examples[i].label, prop.examples[i].label);
  }
}

TEST(Assemble, Deterministic) {
  const Fixture f;
  const auto a = mt::assemble_datasets(f.inputs());
  const auto b = mt::assemble_datasets(f.inputs());
  EXPECT_EQ(a.first.examples, b.first.examples);
  EXPECT_EQ(a.second.examples, b.second.examples);
  EXPECT_EQ(mt::assemble_examples(f.inputs(), mt::Variant::Proposed).examples, a.second.examples);
}

TEST(Assemble, ThresholdControlsExclusion) {
  Fixture f;
  auto in = f.inputs();
  in.sim_threshold = 0.5;
  const auto [base, prop] = mt::assemble_datasets(in);
  // b/q1 now qualifies through q3 at 0.5; c/q2 still has no earlier solve.
  EXPECT_EQ(base.examples.size(), 3u);
  EXPECT_EQ(prop.examples.size(), 3u);
}

TEST(Assemble, FutureRecordsDoNotChangeExistingExamples) {
  const Fixture clean;
  const auto [base0, prop0] = mt::assemble_datasets(clean.inputs());
  Fixture f;
  // Everything injected is at or after the latest existing example.
  f.add("a", "q1", 3000, 5, 2);
  f.add("a", "q1", 9000, 99, 2);
  f.add("b", "q2", 3000, 99);
  f.add("c", "q3", 5000, 99);
  f.add("c", "q1", 6000, 1);
  const auto [base1, prop1] = mt::assemble_datasets(f.inputs());
  std::map<mt::ExampleKey, std::vector<double>> after;
  for (const auto& e : prop1.examples) after[e.key] = e.features;
  for (const auto& e : prop0.examples) {
    ASSERT_TRUE(after.count(e.key));
    EXPECT_EQ(after[e.key], e.features);
  }
}

TEST(Assemble, MissingMetadataRaises) {
  Fixture f;
  f.add("a", "q9", 5000, 50);
  f.matrix = mt::SimilarityMatrix({{"q1"}, {"q9"}}, {1, 0.95, 0.95, 1});
  try {
    mt::assemble_datasets(f.inputs());
    FAIL();
  } catch (const mt::Error& e) {
    EXPECT_EQ(e.code(), mt::ErrorCode::MissingFeatureSource);
  }
}

TEST(DatasetFile, RoundTripIsExact) {
  const Fixture f;
  const auto prop = mt::assemble_datasets(f.inputs()).second;
  auto copy = prop;
  copy.examples[0].features[0] = 0.1 + 0.2;
  std::stringstream ss;
  mt::write_dataset(ss, copy, "hash");
  const auto back = mt::read_dataset(ss);
  EXPECT_EQ(back.variant, mt::Variant::Proposed);
  EXPECT_EQ(back.feature_names, copy.feature_names);
  EXPECT_EQ(back.examples, copy.examples);
}

TEST(Split, SizesAndDeterminism) {
  auto rng = mt::make_rng(1, "split-fixture");
  const auto ex = labeled({25, 25, 25, 25}, 3, rng);
  const auto a = mt::split_train_test(ex, 0.3, 7);
  EXPECT_EQ(a.train.size(), 70u);
  EXPECT_EQ(a.test.size(), 30u);
  EXPECT_EQ(a.seed, 7u);
  const auto b = mt::split_train_test(ex, 0.3, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = mt::split_train_test(ex, 0.3, 8);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, DisjointAndStratified) {
  auto rng = mt::make_rng(2, "split-strat");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> counts;
    for (int c = 0; c < 4; ++c) counts.push_back(static_cast<int>(mt::uniform_int(rng, 2, 60)));
    const auto ex = labeled(counts, 2, rng);
    const double frac = mt::uniform(rng, 0.1, 0.5);
    const auto s = mt::split_train_test(ex, frac, static_cast<std::uint64_t>(trial));
    std::set<mt::ExampleKey> train_keys;
    for (const auto& e : s.train) train_keys.insert(e.key);
    for (const auto& e : s.test) EXPECT_FALSE(train_keys.count(e.key));
    EXPECT_EQ(s.train.size() + s.test.size(), ex.size());
    const auto tc = class_counts(s.train);
    for (int c = 0; c < 4; ++c) {
      const double expected = counts[static_cast<std::size_t>(c)] * static_cast<double>(s.train.size()) / ex.size();
      EXPECT_LE(std::abs(tc[static_cast<std::size_t>(c)] - expected), 1.0) << "trial " << trial << " class " << c;
    }
  }
}

TEST(Split, SingleExampleClassFallsBack) {
  auto rng = mt::make_rng(3, "split-single");
  const auto ex = labeled({20, 1, 20, 20}, 2, rng);
  const auto s = mt::split_train_test(ex, 0.3, 1);
  EXPECT_EQ(s.train.size() + s.test.size(), ex.size());
  EXPECT_EQ(s.test.size(), 18u);
  EXPECT_THROW(mt::split_train_test(ex, 1.0, 1), mt::Error);
}

TEST(Smote, BalancesToMajority) {
  auto rng = mt::make_rng(4, "smote-bal");
  const auto train = labeled({50, 10}, 3, rng);
  const auto out = mt::smote_oversample(train, 5, 11);
  EXPECT_EQ(out.size(), 100u);
  EXPECT_EQ(class_counts(out), (std::vector<int>{50, 50, 0, 0}));
  const auto synthetic = std::count_if(out.begin(), out.end(), [](const auto& e) { return e.synthetic.has_value(); });
  EXPECT_EQ(synthetic, 40);
  EXPECT_TRUE(std::equal(train.begin(), train.end(), out.begin()));
}

TEST(Smote, ConvexCombinationOfTwoPoints) {
  std::vector<mt::LabeledExample> train;
  for (int i = 0; i < 4; ++i) train.push_back({{{"m"}, {"q"}, i}, {5.0 + i, 5.0}, 0, {}});
  train.push_back({{{"a"}, {"q"}, 10}, {0, 0}, 1, {}});
  train.push_back({{{"b"}, {"q"}, 11}, {1, 1}, 1, {}});
  const auto out = mt::smote_oversample(train, 5, 3);
  ASSERT_EQ(out.size(), 8u);
  for (std::size_t i = 6; i < out.size(); ++i) {
    EXPECT_EQ(out[i].label, 1);
    const double l = out[i].features[0];
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 1.0);
    EXPECT_EQ(out[i].features[1], l);
  }
}

TEST(Smote, SyntheticPointsLieOnSegments) {
  auto rng = mt::make_rng(5, "smote-seg");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> counts;
    for (int c = 0; c < 4; ++c) counts.push_back(static_cast<int>(mt::uniform_int(rng, 2, 40)));
    const auto train = labeled(counts, 4, rng);
    const auto out = mt::smote_oversample(train, static_cast<int>(mt::uniform_int(rng, 1, 7)), 100 + trial);
    const int majority = *std::max_element(counts.begin(), counts.end());
    for (int c : class_counts(out)) EXPECT_EQ(c, majority);
    for (const auto& e : out) {
      if (!e.synthetic) continue;
      const auto& o = *e.synthetic;
      const auto& a = train[o.base];
      const auto& b = train[o.neighbor];
      EXPECT_EQ(a.label, e.label);
      EXPECT_EQ(b.label, e.label);
      EXPECT_NE(o.base, o.neighbor);
      for (std::size_t d = 0; d < e.features.size(); ++d) {
        EXPECT_GE(e.features[d], std::min(a.features[d], b.features[d]) - 1e-12);
        EXPECT_LE(e.features[d], std::max(a.features[d], b.features[d]) + 1e-12);
        EXPECT_NEAR(e.features[d], a.features[d] + o.lambda * (b.features[d] - a.features[d]), 1e-12);
      }
    }
  }
}

TEST(Smote, NeighbourIsAmongKNearest) {
  auto rng = mt::make_rng(6, "smote-knn");
  const auto train = labeled({40, 12}, 2, rng);
  const int k = 3;
  const auto out = mt::smote_oversample(train, k, 9);
  // Scaled distances use the range over the whole training set.
  std::vector<double> lo(2, 1e300), hi(2, -1e300);
  for (const auto& e : train) {
    for (int d = 0; d < 2; ++d) {
      lo[d] = std::min(lo[d], e.features[d]);
      hi[d] = std::max(hi[d], e.features[d]);
    }
  }
  auto dist = [&](const auto& a, const auto& b) {
    double s = 0;
    for (int d = 0; d < 2; ++d) s += std::pow((a[d] - b[d]) / (hi[d] - lo[d]), 2);
    return s;
  };
  for (const auto& e : out) {
    if (!e.synthetic) continue;
    const auto& base = train[e.synthetic->base].features;
    const double chosen = dist(base, train[e.synthetic->neighbor].features);
    int closer = 0;
    for (std::size_t j = 0; j < train.size(); ++j) {
      if (j == e.synthetic->base || train[j].label != e.label) continue;
      if (dist(base, train[j].features) < chosen) ++closer;
    }
    EXPECT_LT(closer, k);
  }
}

TEST(Smote, BalancedInputUnchanged) {
  auto rng = mt::make_rng(7, "smote-id");
  const auto train = labeled({10, 10, 10, 10}, 3, rng);
  EXPECT_EQ(mt::smote_oversample(train, 5, 1), train);
}

TEST(Smote, SingleExampleClassIsDuplicated) {
  auto rng = mt::make_rng(8, "smote-one");
  const auto train = labeled({5, 1}, 2, rng);
  const auto out = mt::smote_oversample(train, 5, 1);
  ASSERT_EQ(out.size(), 10u);
  for (std::size_t i = 6; i < 10; ++i) EXPECT_EQ(out[i].features, train[5].features);
}

TEST(Smote, Deterministic) {
  auto rng = mt::make_rng(9, "smote-det");
  const auto train = labeled({30, 7, 12, 3}, 5, rng);
  EXPECT_EQ(mt::smote_oversample(train, 5, 42), mt::smote_oversample(train, 5, 42));
}
