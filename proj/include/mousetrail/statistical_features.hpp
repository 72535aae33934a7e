#pragma once

// Historical statistics of questions and students, including crossed
// (dimension x grade x difficulty) cells and trailing-window recent stats.

#include <algorithm>
#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mousetrail/error.hpp"
#include "mousetrail/stats.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

using QuestionCatalog = std::map<QuestionId, QuestionMeta>;

inline QuestionCatalog make_catalog(const std::vector<QuestionMeta>& metas) {
  QuestionCatalog catalog;
  for (const auto& m : metas) catalog.emplace(m.question, m);
  return catalog;
}

// The category universe used for one-hot and crossed features. Fixed from the
// question metadata before any feature is computed so every vector has the
// same length.
struct FeatureSchema {
  std::vector<std::string> dimensions;
  std::vector<int> grades;
  std::vector<int> difficulties;

  static FeatureSchema from_questions(const std::vector<QuestionMeta>& metas) {
    FeatureSchema s;
    for (const auto& m : metas) {
      s.dimensions.push_back(m.math_dimension);
      s.grades.push_back(m.grade);
      s.difficulties.push_back(m.difficulty);
    }
    auto uniq = [](auto& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(s.dimensions);
    uniq(s.grades);
    uniq(s.difficulties);
    return s;
  }

  std::size_t cell_count() const { return dimensions.size() * grades.size() * difficulties.size(); }
  std::size_t grade_difficulty_count() const { return grades.size() * difficulties.size(); }

  std::size_t dimension_index(const QuestionMeta& m) const { return index_in(dimensions, m.math_dimension); }

  std::size_t grade_difficulty_index(const QuestionMeta& m) const {
    return index_in(grades, m.grade) * difficulties.size() + index_in(difficulties, m.difficulty);
  }

  std::size_t cell_index(const QuestionMeta& m) const {
    return dimension_index(m) * grade_difficulty_count() + grade_difficulty_index(m);
  }

  std::vector<std::string> cell_labels() const {
    std::vector<std::string> out;
    for (const auto& d : dimensions) {
      for (const auto& gd : grade_difficulty_labels()) out.push_back(d + "|" + gd);
    }
    return out;
  }

  std::vector<std::string> grade_difficulty_labels() const {
    std::vector<std::string> out;
    for (int g : grades) {
      for (int k : difficulties) out.push_back("g" + std::to_string(g) + "|d" + std::to_string(k));
    }
    return out;
  }

 private:
  template <class T>
  static std::size_t index_in(const std::vector<T>& v, const T& value) {
    auto it = std::lower_bound(v.begin(), v.end(), value);
    if (it == v.end() || !(*it == value)) {
      throw Error(ErrorCode::MissingFeatureSource, "category outside the feature schema");
    }
    return static_cast<std::size_t>(it - v.begin());
  }
};

inline const QuestionMeta& lookup(const QuestionCatalog& catalog, const QuestionId& q) {
  auto it = catalog.find(q);
  if (it == catalog.end()) throw Error(ErrorCode::MissingFeatureSource, "no metadata for question " + q.value);
  return it->second;
}

struct QuestionStats {
  std::vector<double> dimension_one_hot;
  double grade = 0;
  double difficulty = 0;
  double total_submissions = 0;
  double second_submissions = 0;
  std::array<double, kNumClasses> pct_per_class{kMissing, kMissing, kMissing, kMissing};

  std::vector<double> values() const {
    std::vector<double> v = dimension_one_hot;
    v.insert(v.end(), {grade, difficulty, total_submissions, second_submissions});
    v.insert(v.end(), pct_per_class.begin(), pct_per_class.end());
    return v;
  }

  static std::vector<std::string> names(const FeatureSchema& schema) {
    std::vector<std::string> n;
    for (const auto& d : schema.dimensions) n.push_back("q_dim[" + d + "]");
    n.insert(n.end(), {"q_grade", "q_difficulty", "q_total_submissions", "q_second_submissions"});
    for (int c = 0; c < kNumClasses; ++c) n.push_back("q_pct_class[" + std::to_string(c) + "]");
    return n;
  }
};

// Uses only records of meta's question submitted strictly before cutoff.
inline QuestionStats compute_question_stats(std::span<const SubmissionRecord> records, const QuestionMeta& meta,
                                            TimestampMs cutoff, const FeatureSchema& schema) {
  QuestionStats s;
  s.dimension_one_hot.assign(schema.dimensions.size(), 0.0);
  s.dimension_one_hot[schema.dimension_index(meta)] = 1.0;
  s.grade = meta.grade;
  s.difficulty = meta.difficulty;
  std::array<double, kNumClasses> counts{};
  for (const auto& r : records) {
    if (r.question != meta.question || r.submitted_at >= cutoff) continue;
    s.total_submissions += 1;
    if (r.attempt_index == 2) s.second_submissions += 1;
    counts[static_cast<std::size_t>(r.score_class)] += 1;
  }
  if (s.total_submissions > 0) {
    for (int c = 0; c < kNumClasses; ++c) s.pct_per_class[c] = counts[c] / s.total_submissions;
  }
  return s;
}

struct StudentStats {
  double total_submissions = 0;
  double second_submissions = 0;
  std::vector<double> pct_per_cell;
  std::vector<double> first_avg_score_per_cell;

  std::vector<double> values() const {
    std::vector<double> v{total_submissions, second_submissions};
    v.insert(v.end(), pct_per_cell.begin(), pct_per_cell.end());
    v.insert(v.end(), first_avg_score_per_cell.begin(), first_avg_score_per_cell.end());
    return v;
  }

  static std::vector<std::string> names(const FeatureSchema& schema) {
    std::vector<std::string> n{"s_total_submissions", "s_second_submissions"};
    const auto cells = schema.cell_labels();
    for (const auto& c : cells) n.push_back("s_pct[" + c + "]");
    for (const auto& c : cells) n.push_back("s_first_avg[" + c + "]");
    return n;
  }
};

// records: one student's submissions; only those before cutoff are used.
inline StudentStats compute_student_stats(std::span<const SubmissionRecord> records,
                                          const QuestionCatalog& catalog, TimestampMs cutoff,
                                          const FeatureSchema& schema) {
  const std::size_t cells = schema.cell_count();
  StudentStats s;
  s.pct_per_cell.assign(cells, kMissing);
  s.first_avg_score_per_cell.assign(cells, kMissing);
  std::vector<double> count(cells, 0.0), first_sum(cells, 0.0), first_n(cells, 0.0);
  for (const auto& r : records) {
    if (r.submitted_at >= cutoff) continue;
    const auto cell = schema.cell_index(lookup(catalog, r.question));
    s.total_submissions += 1;
    if (r.attempt_index == 2) s.second_submissions += 1;
    count[cell] += 1;
    if (r.attempt_index == 1) {
      first_sum[cell] += r.raw_score;
      first_n[cell] += 1;
    }
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (count[c] > 0) s.pct_per_cell[c] = count[c] / s.total_submissions;
    if (first_n[c] > 0) s.first_avg_score_per_cell[c] = first_sum[c] / first_n[c];
  }
  return s;
}

struct RecentStats {
  int window_days = 14;
  std::vector<double> count_per_dimension;
  std::vector<double> count_per_grade_difficulty;
  std::vector<double> avg_per_dimension;
  std::vector<double> avg_per_grade_difficulty;
  std::vector<double> std_per_dimension;
  std::vector<double> std_per_grade_difficulty;

  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto* part : {&count_per_dimension, &count_per_grade_difficulty, &avg_per_dimension,
                             &avg_per_grade_difficulty, &std_per_dimension, &std_per_grade_difficulty}) {
      v.insert(v.end(), part->begin(), part->end());
    }
    return v;
  }

  static std::vector<std::string> names(const FeatureSchema& schema) {
    std::vector<std::string> n;
    const auto gd = schema.grade_difficulty_labels();
    for (const char* stat : {"count", "avg", "std"}) {
      for (const auto& d : schema.dimensions) n.push_back(std::string("r_") + stat + "_dim[" + d + "]");
      for (const auto& c : gd) n.push_back(std::string("r_") + stat + "_gd[" + c + "]");
    }
    return n;
  }
};

// Trailing window [as_of - N days, as_of). Everything is -1 when the window is
// empty; an empty group inside a non-empty window has count 0 and -1 stats.
inline RecentStats compute_recent_stats(std::span<const SubmissionRecord> records, const QuestionCatalog& catalog,
                                        TimestampMs as_of, int window_days, const FeatureSchema& schema) {
  const std::size_t dims = schema.dimensions.size();
  const std::size_t gds = schema.grade_difficulty_count();
  RecentStats s;
  s.window_days = window_days;
  std::vector<std::vector<double>> by_dim(dims), by_gd(gds);
  const TimestampMs from = as_of - static_cast<TimestampMs>(window_days) * kMsPerDay;
  bool any = false;
  for (const auto& r : records) {
    if (r.submitted_at < from || r.submitted_at >= as_of) continue;
    const auto& meta = lookup(catalog, r.question);
    by_dim[schema.dimension_index(meta)].push_back(r.raw_score);
    by_gd[schema.grade_difficulty_index(meta)].push_back(r.raw_score);
    any = true;
  }
  auto fill = [&](const std::vector<std::vector<double>>& groups, std::vector<double>& count,
                  std::vector<double>& avg, std::vector<double>& sd) {
    for (const auto& g : groups) {
      count.push_back(any ? static_cast<double>(g.size()) : kMissing);
      avg.push_back(stats::mean(g));
      sd.push_back(stats::population_stddev(g));
    }
  };
  fill(by_dim, s.count_per_dimension, s.avg_per_dimension, s.std_per_dimension);
  fill(by_gd, s.count_per_grade_difficulty, s.avg_per_grade_difficulty, s.std_per_grade_difficulty);
  return s;
}

}  // namespace mousetrail
