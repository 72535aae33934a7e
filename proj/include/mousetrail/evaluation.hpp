#pragma once

// Classification metrics: confusion matrix, accuracy, weighted F1,
// one-vs-rest ROC/AUC with macro averaging, and ABROCA.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mousetrail/error.hpp"
#include "mousetrail/log.hpp"
#include "mousetrail/models.hpp"
#include "mousetrail/stats.hpp"

namespace mousetrail {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = kNumClasses) : n_(classes), counts_(classes * classes, 0) {}

  static ConfusionMatrix from_rows(const std::vector<std::vector<long>>& rows) {
    ConfusionMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw Error(ErrorCode::InvalidArgument, "confusion matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[i][j] < 0) throw Error(ErrorCode::InvalidArgument, "negative count");
        m.counts_[i * m.n_ + j] = rows[i][j];
      }
    }
    return m;
  }

  void add(int truth, int predicted) { ++counts_[static_cast<std::size_t>(truth) * n_ + static_cast<std::size_t>(predicted)]; }
  long at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::size_t classes() const { return n_; }
  long total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

  long row_sum(std::size_t truth) const {
    long s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += at(truth, j);
    return s;
  }
  long column_sum(std::size_t predicted) const {
    long s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, predicted);
    return s;
  }

  // Each row divided by its support; rows without support stay zero.
  std::vector<std::vector<double>> row_normalized() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_, 0.0));
    for (std::size_t i = 0; i < n_; ++i) {
      const long r = row_sum(i);
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = r > 0 ? static_cast<double>(at(i, j)) / static_cast<double>(r) : 0.0;
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<long> counts_;
};

struct AccuracyF1 {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
};

inline AccuracyF1 accuracy_weighted_f1(const ConfusionMatrix& cm) {
  const long total = cm.total();
  if (total <= 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no entries");
  double trace = 0.0, wf1 = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    trace += tp;
    const double support = static_cast<double>(cm.row_sum(c));
    const double predicted = static_cast<double>(cm.column_sum(c));
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = support > 0 ? tp / support : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    wf1 += support / static_cast<double>(total) * f1;
  }
  return {trace / static_cast<double>(total), wf1};
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

// Trapezoid area under a curve.
inline double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

// Binary ROC by sweeping the score threshold from high to low; tied scores
// move the curve in one diagonal step. Needs at least one positive and one
// negative.
inline RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw Error(ErrorCode::InvalidArgument, "scores/labels size mismatch");
  const double pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::InvalidArgument, "ROC needs both positives and negatives");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (positive[order[j]] ? tp : fp) += 1;
      ++j;
    }
    curve.points.push_back({fp / neg, tp / pos});
    i = j;
  }
  curve.points.back() = {1.0, 1.0};
  return curve;
}

inline constexpr std::size_t kRocGridPoints = 101;

// Resamples a curve onto fpr = 0, 0.01, ..., 1 by linear interpolation (the
// highest tpr is used where the curve is vertical), preceded by (0,0).
inline RocCurve resample_roc(const RocCurve& curve) {
  RocCurve out;
  out.points.push_back({0.0, 0.0});
  const auto& p = curve.points;
  std::size_t k = 0;
  for (std::size_t g = 0; g < kRocGridPoints; ++g) {
    const double x = static_cast<double>(g) / static_cast<double>(kRocGridPoints - 1);
    while (k + 1 < p.size() && p[k + 1].fpr <= x) ++k;
    double y;
    if (k + 1 >= p.size() || p[k].fpr == x) {
      y = p[k].tpr;
    } else {
      const auto& a = p[k];
      const auto& b = p[k + 1];
      y = a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr);
    }
    out.points.push_back({x, y});
  }
  return out;
}

struct OvrRoc {
  std::vector<std::optional<RocCurve>> per_class;  // nullopt for skipped classes
  std::vector<double> per_class_auc;               // -1 for skipped classes
  std::vector<int> skipped_classes;
  double macro_auc = 0.0;
  RocCurve macro_curve;  // on the shared fpr grid
};

// One-vs-rest ROC per class, macro AUC over the classes that have both
// positives and negatives, and the grid-averaged macro curve.
inline OvrRoc roc_auc_ovr(std::span<const Probabilities> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "scores/labels size mismatch");
  OvrRoc out;
  out.per_class.resize(kNumClasses);
  out.per_class_auc.assign(kNumClasses, kMissing);
  std::vector<RocCurve> grids;
  std::vector<double> s(scores.size());
  std::vector<bool> positive(scores.size());
  for (int c = 0; c < kNumClasses; ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = scores[i][static_cast<std::size_t>(c)];
      positive[i] = labels[i] == c;
      positives += labels[i] == c;
    }
    if (positives == 0 || positives == labels.size()) {
      log::warn("ROC: class " + std::to_string(c) + " lacks positives or negatives; skipped");
      out.skipped_classes.push_back(c);
      continue;
    }
    auto curve = roc_curve(s, positive);
    out.per_class_auc[static_cast<std::size_t>(c)] = auc(curve);
    grids.push_back(resample_roc(curve));
    out.per_class[static_cast<std::size_t>(c)] = std::move(curve);
  }
  if (grids.empty()) throw Error(ErrorCode::InvalidArgument, "no class has both positives and negatives");
  double sum = 0.0;
  for (double a : out.per_class_auc) {
    if (a >= 0) sum += a;
  }
  out.macro_auc = sum / static_cast<double>(grids.size());
  out.macro_curve = grids.front();
  for (std::size_t p = 0; p < out.macro_curve.points.size(); ++p) {
    double t = 0.0;
    for (const auto& g : grids) t += g.points[p].tpr;
    out.macro_curve.points[p].tpr = t / static_cast<double>(grids.size());
  }
  return out;
}

struct Abroca {
  double signed_area = 0.0;
  double absolute_area = 0.0;
};

// Area between two curves sampled on the same fpr grid. The signed area is
// AUC(a) - AUC(b); the absolute area integrates |a - b| exactly for
// piecewise-linear curves.
inline Abroca abroca(const RocCurve& a, const RocCurve& b) {
  if (a.points.size() != b.points.size()) throw Error(ErrorCode::GridMismatch, "curves differ in length");
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].fpr != b.points[i].fpr) throw Error(ErrorCode::GridMismatch, "curves use different fpr grids");
  }
  Abroca r;
  r.signed_area = auc(a) - auc(b);
  for (std::size_t i = 1; i < a.points.size(); ++i) {
    const double w = a.points[i].fpr - a.points[i - 1].fpr;
    if (w <= 0) continue;
    const double d0 = a.points[i - 1].tpr - b.points[i - 1].tpr;
    const double d1 = a.points[i].tpr - b.points[i].tpr;
    if ((d0 >= 0) == (d1 >= 0) || d0 == 0 || d1 == 0) {
      r.absolute_area += w * (std::abs(d0) + std::abs(d1)) * 0.5;
    } else {
      const double t = d0 / (d0 - d1);
      r.absolute_area += 0.5 * w * (t * std::abs(d0) + (1 - t) * std::abs(d1));
    }
  }
  return r;
}

struct ModelEvaluation {
  ConfusionMatrix confusion;
  AccuracyF1 metrics;
  OvrRoc roc;
};

inline ModelEvaluation evaluate_model(const TrainedModel& model, std::span<const LabeledExample> test) {
  ModelEvaluation ev{ConfusionMatrix(kNumClasses), {}, {}};
  std::vector<Probabilities> probs;
  std::vector<int> labels;
  probs.reserve(test.size());
  for (const auto& e : test) {
    probs.push_back(model.predict_proba(e.features));
    labels.push_back(e.label);
    ev.confusion.add(e.label, argmax(probs.back()));
  }
  ev.metrics = accuracy_weighted_f1(ev.confusion);
  ev.roc = roc_auc_ovr(probs, labels);
  return ev;
}

}  // namespace mousetrail
