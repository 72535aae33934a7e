#pragma once

// Problem-solving information network (students <-> questions) and the
// question-student-question meta-path similarity built on it.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mousetrail/error.hpp"
#include "mousetrail/interaction_features.hpp"
#include "mousetrail/log.hpp"
#include "mousetrail/text.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

inline constexpr std::size_t kSubmissionFeatureCount = kMouseFeatureCount + 1;

// Matrix entry for question pairs that share no solver.
inline constexpr double kNoPath = -1.0;

// Mouse features of one first submission followed by its raw score.
struct SubmissionFeatureVector {
  StudentId student;
  QuestionId question;
  std::vector<double> values;
};

inline double path_instance_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::FeatureLengthMismatch, "cosine of unequal-length vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    log::debug("cosine similarity with a zero vector; using 0");
    return 0.0;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Bipartite student/question network. Each edge carries the submission's
// feature vector after per-dimension min-max scaling over every edge;
// dimensions that are constant across all edges are dropped.
class ProblemSolvingNetwork {
 public:
  explicit ProblemSolvingNetwork(const std::vector<SubmissionFeatureVector>& submissions) {
    const std::size_t dims = submissions.empty() ? 0 : submissions.front().values.size();
    std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
    for (const auto& s : submissions) {
      if (s.values.size() != dims) {
        throw Error(ErrorCode::InconsistentFeatureLength, "submission feature vectors differ in length");
      }
      for (std::size_t d = 0; d < dims; ++d) {
        if (!std::isfinite(s.values[d])) throw Error(ErrorCode::InvalidArgument, "non-finite feature value");
        lo[d] = std::min(lo[d], s.values[d]);
        hi[d] = std::max(hi[d], s.values[d]);
      }
    }
    for (std::size_t d = 0; d < dims; ++d) {
      if (hi[d] > lo[d]) {
        kept_.push_back(d);
      } else {
        dropped_.push_back(d);
      }
    }
    for (const auto& s : submissions) {
      std::vector<double> scaled;
      scaled.reserve(kept_.size());
      for (std::size_t d : kept_) scaled.push_back((s.values[d] - lo[d]) / (hi[d] - lo[d]));
      auto [it, inserted] = edges_[s.question].emplace(s.student, std::move(scaled));
      if (!inserted) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate first submission for " + s.student.value + "/" + s.question.value);
      }
    }
  }

  std::vector<QuestionId> questions() const {
    std::vector<QuestionId> out;
    for (const auto& [q, _] : edges_) out.push_back(q);
    return out;
  }

  bool contains(const QuestionId& q) const { return edges_.count(q) > 0; }

  const std::map<StudentId, std::vector<double>>& solvers(const QuestionId& q) const {
    auto it = edges_.find(q);
    if (it == edges_.end()) throw Error(ErrorCode::UnknownQuestion, q.value);
    return it->second;
  }

  const std::vector<std::size_t>& kept_dimensions() const { return kept_; }
  const std::vector<std::size_t>& dropped_dimensions() const { return dropped_; }

 private:
  std::map<QuestionId, std::map<StudentId, std::vector<double>>> edges_;
  std::vector<std::size_t> kept_;
  std::vector<std::size_t> dropped_;
};

// Mean cosine similarity over all students who solved both questions, or
// nullopt when there is no such student.
inline std::optional<double> question_similarity(const ProblemSolvingNetwork& net, const QuestionId& qx,
                                                 const QuestionId& qy) {
  const auto& sx = net.solvers(qx);
  const auto& sy = net.solvers(qy);
  double sum = 0.0;
  std::size_t paths = 0;
  auto ix = sx.begin();
  auto iy = sy.begin();
  while (ix != sx.end() && iy != sy.end()) {
    if (ix->first < iy->first) {
      ++ix;
    } else if (iy->first < ix->first) {
      ++iy;
    } else {
      sum += path_instance_similarity(ix->second, iy->second);
      ++paths;
      ++ix;
      ++iy;
    }
  }
  if (paths == 0) return std::nullopt;
  return sum / static_cast<double>(paths);
}

class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<QuestionId> questions, std::vector<double> values,
                   std::vector<std::size_t> dropped_dimensions = {})
      : questions_(std::move(questions)), values_(std::move(values)), dropped_(std::move(dropped_dimensions)) {
    if (values_.size() != questions_.size() * questions_.size()) {
      throw Error(ErrorCode::InvalidArgument, "similarity matrix shape mismatch");
    }
    for (std::size_t i = 0; i < questions_.size(); ++i) index_.emplace(questions_[i], i);
  }

  std::size_t size() const { return questions_.size(); }
  const std::vector<QuestionId>& questions() const { return questions_; }
  const std::vector<std::size_t>& dropped_dimensions() const { return dropped_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * questions_.size() + j]; }

  std::optional<std::size_t> index_of(const QuestionId& q) const {
    auto it = index_.find(q);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double at(const QuestionId& a, const QuestionId& b) const {
    const auto i = index_of(a);
    const auto j = index_of(b);
    if (!i || !j) throw Error(ErrorCode::UnknownQuestion, (i ? b : a).value);
    return at(*i, *j);
  }

 private:
  std::vector<QuestionId> questions_;
  std::vector<double> values_;
  std::vector<std::size_t> dropped_;
  std::map<QuestionId, std::size_t> index_;
};

inline SimilarityMatrix build_similarity_matrix(const ProblemSolvingNetwork& net) {
  const auto qs = net.questions();
  const std::size_t n = qs.size();
  std::vector<double> values(n * n, kNoPath);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = question_similarity(net, qs[i], qs[j]).value_or(kNoPath);
      values[i * n + j] = s;
      values[j * n + i] = s;
    }
  }
  return SimilarityMatrix(qs, std::move(values), net.dropped_dimensions());
}

struct SimilarQuestion {
  QuestionId question;
  double similarity = 0.0;
  friend bool operator==(const SimilarQuestion&, const SimilarQuestion&) = default;
};

// Most similar question among `solved` whose similarity to qx reaches the
// threshold; ties go to the smallest question id. qx itself never qualifies.
inline std::optional<SimilarQuestion> most_similar_solved(const SimilarityMatrix& matrix, const QuestionId& qx,
                                                          std::span<const QuestionId> solved, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "similarity threshold must be within [0,1]");
  }
  const auto ix = matrix.index_of(qx);
  if (!ix) throw Error(ErrorCode::UnknownQuestion, qx.value);
  std::optional<SimilarQuestion> best;
  for (const auto& qy : solved) {
    if (qy == qx) continue;
    const auto iy = matrix.index_of(qy);
    if (!iy) continue;
    const double s = matrix.at(*ix, *iy);
    if (s < threshold) continue;
    if (!best || s > best->similarity || (s == best->similarity && qy < best->question)) best = {qy, s};
  }
  return best;
}

// CSV with a question-id header row and first column; 9 decimal places.
inline void write_similarity_matrix(std::ostream& out, const SimilarityMatrix& m,
                                    const std::string& config_hash = {}) {
  out << "# mousetrail similarity matrix";
  if (!config_hash.empty()) out << " config_hash=" << config_hash;
  out << " dropped_dimensions=";
  for (std::size_t i = 0; i < m.dropped_dimensions().size(); ++i) {
    out << (i ? ";" : "") << m.dropped_dimensions()[i];
  }
  out << '\n' << "question_id";
  for (const auto& q : m.questions()) out << ',' << q.value;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.questions()[i].value;
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << text::format_fixed(m.at(i, j), 9);
    out << '\n';
  }
}

inline SimilarityMatrix read_similarity_matrix(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> dropped;
  // The dropped-dimension list lives in the leading comment.
  while (in.peek() == '#') {
    std::getline(in, line);
    ++line_no;
    const auto pos = line.find("dropped_dimensions=");
    if (pos != std::string::npos) {
      const auto list = std::string_view(line).substr(pos + 19);
      if (!text::trim(list).empty()) {
        for (auto f : text::split(text::trim(list), ';')) {
          const auto v = text::parse_int(f);
          if (!v) throw Error(ErrorCode::MalformedRow, "bad dropped_dimensions list");
          dropped.push_back(static_cast<std::size_t>(*v));
        }
      }
    }
  }
  if (!text::next_data_line(in, line, line_no)) throw Error(ErrorCode::MalformedRow, "empty similarity matrix");
  auto header = text::split(line);
  if (header.empty() || header[0] != "question_id") throw Error(ErrorCode::MalformedRow, "bad matrix header");
  std::vector<QuestionId> qs;
  for (std::size_t i = 1; i < header.size(); ++i) qs.push_back({std::string(header[i])});
  std::vector<double> values;
  values.reserve(qs.size() * qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (!text::next_data_line(in, line, line_no)) throw Error(ErrorCode::MalformedRow, "truncated matrix");
    auto f = text::split(line);
    if (f.size() != qs.size() + 1 || f[0] != qs[i].value) {
      throw Error(ErrorCode::MalformedRow, "matrix line " + std::to_string(line_no));
    }
    for (std::size_t j = 1; j < f.size(); ++j) {
      const auto v = text::parse_double(f[j]);
      if (!v) throw Error(ErrorCode::MalformedRow, "matrix line " + std::to_string(line_no));
      values.push_back(*v);
    }
  }
  return SimilarityMatrix(std::move(qs), std::move(values), std::move(dropped));
}

}  // namespace mousetrail
