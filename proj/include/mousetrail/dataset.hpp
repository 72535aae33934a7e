#pragma once

// Feature-vector assembly for the baseline and proposed layouts, stratified
// train/test splitting and SMOTE oversampling of the training set.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mousetrail/error.hpp"
#include "mousetrail/interaction_features.hpp"
#include "mousetrail/labeled.hpp"
#include "mousetrail/log.hpp"
#include "mousetrail/rng.hpp"
#include "mousetrail/similarity.hpp"
#include "mousetrail/statistical_features.hpp"

namespace mousetrail {

inline constexpr std::size_t kSimilarBlockSize = kMouseFeatureCount + 2;

// Mouse features of one graded submission whose trajectory was recovered.
struct MouseFeatureRow {
  StudentId student;
  QuestionId question;
  TimestampMs submitted_at = 0;
  int attempt_index = 1;
  int raw_score = 0;
  int score_class = 0;
  std::vector<double> features;  // kMouseFeatureCount values

  friend bool operator==(const MouseFeatureRow&, const MouseFeatureRow&) = default;
};

// Everything assembly reads. All references must outlive the call.
struct AssemblyInputs {
  const std::vector<SubmissionRecord>& records;
  const QuestionCatalog& catalog;
  const FeatureSchema& schema;
  TimestampMs experiment_start = 0;  // cutoff for question and student statistics
  int recent_window_days = 14;
  const SimilarityMatrix& matrix;
  const std::vector<MouseFeatureRow>& mouse_rows;
  double sim_threshold = 0.8;
};

inline std::vector<std::string> baseline_feature_names(const FeatureSchema& schema) {
  auto names = QuestionStats::names(schema);
  for (auto&& part : {StudentStats::names(schema), RecentStats::names(schema)}) {
    names.insert(names.end(), part.begin(), part.end());
  }
  return names;
}

inline std::vector<std::string> proposed_feature_names(const FeatureSchema& schema) {
  auto names = baseline_feature_names(schema);
  for (const auto& n : mouse_feature_names()) names.push_back("qy_" + n);
  names.push_back("qy_score_class");
  names.push_back("qy_similarity");
  return names;
}

namespace detail {

struct AssemblyIndex {
  std::map<StudentId, std::vector<SubmissionRecord>> history;  // per student, by time
  std::map<std::pair<StudentId, QuestionId>, const MouseFeatureRow*> first_rows;
  std::map<StudentId, std::vector<const MouseFeatureRow*>> first_rows_by_student;  // by time
};

inline AssemblyIndex index_inputs(const AssemblyInputs& in) {
  AssemblyIndex idx;
  for (const auto& r : in.records) idx.history[r.student].push_back(r);
  for (auto& [_, v] : idx.history) {
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.submitted_at < b.submitted_at; });
  }
  for (const auto& row : in.mouse_rows) {
    if (row.attempt_index != 1) continue;
    if (row.features.size() != kMouseFeatureCount) {
      throw Error(ErrorCode::InconsistentFeatureLength, "mouse feature row of wrong length");
    }
    if (idx.first_rows.emplace(std::pair{row.student, row.question}, &row).second) {
      idx.first_rows_by_student[row.student].push_back(&row);
    }
  }
  for (auto& [_, v] : idx.first_rows_by_student) {
    std::stable_sort(v.begin(), v.end(),
                     [](const auto* a, const auto* b) { return a->submitted_at < b->submitted_at; });
  }
  return idx;
}

}  // namespace detail

// Assembles both layouts over the same set of records: first submissions at or
// after the experiment start for which the student had already solved a
// question similar enough to the target one. Records without such a question
// are dropped from both.
inline std::pair<Dataset, Dataset> assemble_datasets(const AssemblyInputs& in) {
  const auto idx = detail::index_inputs(in);

  std::vector<const SubmissionRecord*> targets;
  for (const auto& r : in.records) {
    if (r.attempt_index == 1 && r.submitted_at >= in.experiment_start) targets.push_back(&r);
  }
  std::stable_sort(targets.begin(), targets.end(), [](const auto* a, const auto* b) {
    return std::tie(a->submitted_at, a->student, a->question) < std::tie(b->submitted_at, b->student, b->question);
  });

  std::map<QuestionId, std::vector<double>> question_block;
  std::map<StudentId, std::vector<double>> student_block;
  const std::vector<SubmissionRecord> no_history;

  Dataset baseline{Variant::Baseline, baseline_feature_names(in.schema), {}};
  Dataset proposed{Variant::Proposed, proposed_feature_names(in.schema), {}};

  for (const auto* r : targets) {
    if (!in.matrix.index_of(r->question)) continue;
    std::vector<QuestionId> solved;
    std::vector<const MouseFeatureRow*> solved_rows;
    if (auto it = idx.first_rows_by_student.find(r->student); it != idx.first_rows_by_student.end()) {
      for (const auto* row : it->second) {
        if (row->submitted_at >= r->submitted_at) break;
        solved.push_back(row->question);
      }
    }
    const auto similar = most_similar_solved(in.matrix, r->question, solved, in.sim_threshold);
    if (!similar) continue;

    const auto& meta = lookup(in.catalog, r->question);
    auto hist_it = idx.history.find(r->student);
    const auto& history = hist_it == idx.history.end() ? no_history : hist_it->second;

    auto qb = question_block.find(r->question);
    if (qb == question_block.end()) {
      // Question statistics come from every student's records, so filter the full list.
      qb = question_block
               .emplace(r->question,
                        compute_question_stats(in.records, meta, in.experiment_start, in.schema).values())
               .first;
    }
    auto sb = student_block.find(r->student);
    if (sb == student_block.end()) {
      sb = student_block
               .emplace(r->student,
                        compute_student_stats(history, in.catalog, in.experiment_start, in.schema).values())
               .first;
    }
    const auto recent =
        compute_recent_stats(history, in.catalog, r->submitted_at, in.recent_window_days, in.schema).values();

    LabeledExample ex;
    ex.key = {r->student, r->question, r->submitted_at};
    ex.label = r->score_class;
    ex.features = qb->second;
    ex.features.insert(ex.features.end(), sb->second.begin(), sb->second.end());
    ex.features.insert(ex.features.end(), recent.begin(), recent.end());
    baseline.examples.push_back(ex);

    const auto* qy = idx.first_rows.at({r->student, similar->question});
    ex.features.insert(ex.features.end(), qy->features.begin(), qy->features.end());
    ex.features.push_back(qy->score_class);
    ex.features.push_back(similar->similarity);
    proposed.examples.push_back(std::move(ex));
  }
  return {std::move(baseline), std::move(proposed)};
}

inline Dataset assemble_examples(const AssemblyInputs& in, Variant variant) {
  auto both = assemble_datasets(in);
  return variant == Variant::Baseline ? std::move(both.first) : std::move(both.second);
}

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  std::uint64_t seed = 0;
};

// Stratified by label with largest-remainder allocation, so the test set has
// round(n * test_fraction) examples and each class is within one example of
// its share. Falls back to a plain shuffle when some class has one example.
inline DatasetSplit split_train_test(const std::vector<LabeledExample>& examples, double test_fraction,
                                     std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test_fraction must be within (0,1)");
  }
  auto rng = make_rng(seed, "split");
  const std::size_t n = examples.size();
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));

  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(examples[i].label)].push_back(i);
  const bool stratify = std::none_of(by_class.begin(), by_class.end(), [](const auto& c) { return c.size() == 1; });

  std::vector<char> in_test(n, 0);
  if (stratify) {
    std::vector<std::size_t> take(kNumClasses);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allotted = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      const double exact = static_cast<double>(by_class[c].size()) * test_fraction;
      take[c] = static_cast<std::size_t>(std::floor(exact));
      allotted += take[c];
      remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; allotted < n_test && i < remainders.size(); ++i) {
      if (take[remainders[i].second] < by_class[remainders[i].second].size()) {
        ++take[remainders[i].second];
        ++allotted;
      }
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      for (std::size_t i = 0; i < take[c]; ++i) in_test[by_class[c][i]] = 1;
    }
  } else {
    log::warn("a class has a single example; splitting without stratification");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = 1;
  }

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? split.test : split.train).push_back(examples[i]);
  return split;
}

// Oversamples every minority class up to the majority count by interpolating
// between a point and one of its k nearest same-class neighbours (Euclidean
// distance on min-max scaled features). Originals are kept verbatim and
// first; synthetic points follow, grouped by class.
inline std::vector<LabeledExample> smote_oversample(const std::vector<LabeledExample>& train, int k,
                                                    std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "SMOTE k must be >= 1");
  std::vector<LabeledExample> out = train;
  if (train.empty()) return out;
  const std::size_t dims = train.front().features.size();

  std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
  std::vector<double> range(dims, 0.0);
  for (const auto& e : train) {
    if (e.features.size() != dims) throw Error(ErrorCode::InconsistentFeatureLength, "SMOTE input");
    for (std::size_t d = 0; d < dims; ++d) lo[d] = std::min(lo[d], e.features[d]);
  }
  for (const auto& e : train) {
    for (std::size_t d = 0; d < dims; ++d) range[d] = std::max(range[d], e.features[d] - lo[d]);
  }
  auto distance2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      if (range[d] == 0.0) continue;
      const double diff = (a[d] - b[d]) / range[d];
      s += diff * diff;
    }
    return s;
  };

  std::vector<std::vector<std::size_t>> members(kNumClasses);
  for (std::size_t i = 0; i < train.size(); ++i) members[static_cast<std::size_t>(train[i].label)].push_back(i);
  std::size_t majority = 0;
  for (const auto& m : members) majority = std::max(majority, m.size());

  for (int c = 0; c < kNumClasses; ++c) {
    const auto& cls = members[static_cast<std::size_t>(c)];
    if (cls.empty() || cls.size() == majority) continue;
    const std::size_t needed = majority - cls.size();
    auto rng = make_rng(seed, "smote", static_cast<std::uint64_t>(c));
    if (cls.size() == 1) {
      log::warn("SMOTE: class " + std::to_string(c) + " has one example; duplicating it");
      for (std::size_t i = 0; i < needed; ++i) {
        LabeledExample e = train[cls[0]];
        e.synthetic = SyntheticOrigin{cls[0], cls[0], 0.0};
        out.push_back(std::move(e));
      }
      continue;
    }
    const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), cls.size() - 1);
    std::vector<std::size_t> order = cls;
    std::shuffle(order.begin(), order.end(), rng);
    std::map<std::size_t, std::vector<std::size_t>> neighbours;
    for (std::size_t s = 0; s < needed; ++s) {
      const std::size_t base = order[s % order.size()];
      auto it = neighbours.find(base);
      if (it == neighbours.end()) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(cls.size() - 1);
        for (std::size_t j : cls) {
          if (j != base) dist.emplace_back(distance2(train[base].features, train[j].features), j);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_eff), dist.end());
        std::vector<std::size_t> nn;
        for (std::size_t j = 0; j < k_eff; ++j) nn.push_back(dist[j].second);
        it = neighbours.emplace(base, std::move(nn)).first;
      }
      const std::size_t nb = it->second[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(k_eff) - 1))];
      const double lambda = uniform01(rng);
      LabeledExample e;
      e.key = train[base].key;
      e.label = c;
      e.synthetic = SyntheticOrigin{base, nb, lambda};
      e.features.resize(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        const double a = train[base].features[d];
        e.features[d] = a + lambda * (train[nb].features[d] - a);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace mousetrail
