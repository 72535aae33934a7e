#pragma once

// Repeated split -> SMOTE -> train -> evaluate runs and their aggregation
// into a report: metric means and spreads, a mean +/- std ROC band, summed
// confusion counts and averaged tree importances.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mousetrail/dataset.hpp"
#include "mousetrail/evaluation.hpp"
#include "mousetrail/labeled.hpp"
#include "mousetrail/models.hpp"
#include "mousetrail/stats.hpp"
#include "mousetrail/text.hpp"

namespace mousetrail {

struct RunSettings {
  int n_runs = 10;
  std::uint64_t base_seed = 42;
  double test_fraction = 0.3;
  int smote_k = 5;
  unsigned jobs = 1;
  bool grid_search = false;
  double grid_validation_fraction = 0.2;
};

struct RunResult {
  std::uint64_t seed = 0;
  AccuracyF1 metrics;
  double macro_auc = 0.0;
  std::vector<double> per_class_auc;
  ConfusionMatrix confusion;
  RocCurve macro_curve;
  std::optional<std::vector<double>> importance;
  std::size_t train_size = 0;  // after oversampling
  std::size_t synthetic_count = 0;
  std::size_t test_size = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& v) { return {stats::mean(v), stats::population_stddev(v)}; }

struct RunReport {
  Variant variant = Variant::Baseline;
  ModelKind kind = ModelKind::GBDT;
  std::vector<RunResult> runs;
  MeanStd accuracy;
  MeanStd weighted_f1;
  MeanStd macro_auc;
  RocCurve mean_curve;          // tpr averaged over runs on the shared grid
  std::vector<double> tpr_std;  // per grid point
  ConfusionMatrix confusion;    // summed over runs
  std::optional<std::vector<double>> mean_importance;
};

// Training set for one run: the stratified split's train part, balanced.
inline std::vector<LabeledExample> balanced_training_set(const DatasetSplit& split, int smote_k) {
  return smote_oversample(split.train, smote_k, split.seed);
}

inline ModelSpec run_spec(ModelKind kind, const std::vector<LabeledExample>& train_set, const RunSettings& settings,
                          std::uint64_t seed) {
  if (!settings.grid_search) return ModelSpec::defaults(kind, seed);
  auto best = grid_search(kind, default_grid(kind), train_set, settings.grid_validation_fraction, seed, settings.jobs).best;
  best.seed = seed;
  return best;
}

inline RunResult evaluate_run(const TrainedModel& model, const DatasetSplit& split, std::size_t train_size) {
  const auto ev = evaluate_model(model, split.test);
  RunResult r;
  r.seed = split.seed;
  r.metrics = ev.metrics;
  r.macro_auc = ev.roc.macro_auc;
  r.per_class_auc = ev.roc.per_class_auc;
  r.confusion = ev.confusion;
  r.macro_curve = ev.roc.macro_curve;
  if (model.kind() != ModelKind::LR) r.importance = gini_importance(model);
  r.train_size = train_size;
  r.synthetic_count = train_size - split.train.size();
  r.test_size = split.test.size();
  return r;
}

inline RunResult run_once(const Dataset& dataset, ModelKind kind, const RunSettings& settings, std::uint64_t seed) {
  const auto split = split_train_test(dataset.examples, settings.test_fraction, seed);
  const auto train_set = balanced_training_set(split, settings.smote_k);
  const auto model = train(run_spec(kind, train_set, settings, seed), train_set, settings.jobs);
  return evaluate_run(model, split, train_set.size());
}

inline RunReport aggregate_runs(Variant variant, ModelKind kind, std::vector<RunResult> runs) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "report needs at least one run");
  RunReport rep;
  rep.variant = variant;
  rep.kind = kind;
  std::vector<double> acc, f1, auc_v;
  for (const auto& r : runs) {
    acc.push_back(r.metrics.accuracy);
    f1.push_back(r.metrics.weighted_f1);
    auc_v.push_back(r.macro_auc);
  }
  rep.accuracy = mean_std(acc);
  rep.weighted_f1 = mean_std(f1);
  rep.macro_auc = mean_std(auc_v);

  rep.mean_curve = runs.front().macro_curve;
  rep.tpr_std.assign(rep.mean_curve.points.size(), 0.0);
  for (std::size_t p = 0; p < rep.mean_curve.points.size(); ++p) {
    std::vector<double> t;
    for (const auto& r : runs) t.push_back(r.macro_curve.points[p].tpr);
    rep.mean_curve.points[p].tpr = stats::mean(t);
    rep.tpr_std[p] = stats::population_stddev(t);
  }

  rep.confusion = ConfusionMatrix(kNumClasses);
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      for (std::size_t j = 0; j < kNumClasses; ++j) {
        for (long c = 0; c < r.confusion.at(i, j); ++c) rep.confusion.add(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }

  if (runs.front().importance) {
    std::vector<double> imp(runs.front().importance->size(), 0.0);
    for (const auto& r : runs) {
      for (std::size_t j = 0; j < imp.size(); ++j) imp[j] += (*r.importance)[j] / static_cast<double>(runs.size());
    }
    rep.mean_importance = std::move(imp);
  }
  rep.runs = std::move(runs);
  return rep;
}

// Seeds base_seed, base_seed + 1, ... drive the split, oversampling and model.
inline RunReport repeated_runs(const Dataset& dataset, ModelKind kind, const RunSettings& settings) {
  if (settings.n_runs < 1) throw Error(ErrorCode::InvalidArgument, "n_runs must be >= 1");
  std::vector<RunResult> runs;
  for (int i = 0; i < settings.n_runs; ++i) {
    runs.push_back(run_once(dataset, kind, settings, settings.base_seed + static_cast<std::uint64_t>(i)));
  }
  return aggregate_runs(dataset.variant, kind, std::move(runs));
}

struct VariantComparison {
  ModelKind kind = ModelKind::GBDT;
  double accuracy_gain = 0.0;  // proposed minus baseline mean accuracy
  Abroca abroca;               // proposed curve against baseline curve
  // Share of the proposed model's importance held by the similar-question
  // block, and the share the baseline block would hold for as many features
  // at its own per-feature average.
  std::optional<double> similar_block_share;
  std::optional<double> baseline_reference_share;
};

inline VariantComparison compare_variants(const RunReport& baseline, const RunReport& proposed) {
  VariantComparison c;
  c.kind = proposed.kind;
  c.accuracy_gain = proposed.accuracy.mean - baseline.accuracy.mean;
  c.abroca = abroca(proposed.mean_curve, baseline.mean_curve);
  if (proposed.mean_importance && proposed.mean_importance->size() > kSimilarBlockSize) {
    const auto& imp = *proposed.mean_importance;
    const std::size_t n_base = imp.size() - kSimilarBlockSize;
    double block = 0.0, base = 0.0;
    for (std::size_t j = 0; j < imp.size(); ++j) (j < n_base ? base : block) += imp[j];
    c.similar_block_share = block;
    c.baseline_reference_share = base / static_cast<double>(n_base) * static_cast<double>(kSimilarBlockSize);
  }
  return c;
}

// ---- Serialization ---------------------------------------------------------------

inline nlohmann::json confusion_json(const ConfusionMatrix& cm) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < cm.classes(); ++j) row.push_back(cm.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json report_json(const RunReport& rep, const std::vector<std::string>& feature_names = {}) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(rep.variant));
  j["model"] = std::string(to_string(rep.kind));
  j["n_runs"] = rep.runs.size();
  j["accuracy"] = {{"mean", rep.accuracy.mean}, {"std", rep.accuracy.std}};
  j["weighted_f1"] = {{"mean", rep.weighted_f1.mean}, {"std", rep.weighted_f1.std}};
  j["macro_auc"] = {{"mean", rep.macro_auc.mean}, {"std", rep.macro_auc.std}};
  j["confusion_total"] = confusion_json(rep.confusion);
  auto runs = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    runs.push_back({{"seed", r.seed},
                    {"accuracy", r.metrics.accuracy},
                    {"weighted_f1", r.metrics.weighted_f1},
                    {"macro_auc", r.macro_auc},
                    {"per_class_auc", r.per_class_auc},
                    {"train_size", r.train_size},
                    {"synthetic_examples", r.synthetic_count},
                    {"test_size", r.test_size},
                    {"confusion", confusion_json(r.confusion)}});
  }
  j["runs"] = runs;
  if (rep.mean_importance) {
    auto imp = nlohmann::json::object();
    for (std::size_t k = 0; k < rep.mean_importance->size(); ++k) {
      const std::string name = k < feature_names.size() ? feature_names[k] : "f" + std::to_string(k);
      imp[name] = (*rep.mean_importance)[k];
    }
    j["importance"] = imp;
  }
  return j;
}

inline nlohmann::json comparison_json(const VariantComparison& c) {
  nlohmann::json j{{"model", std::string(to_string(c.kind))},
                   {"accuracy_gain", c.accuracy_gain},
                   {"abroca_signed", c.abroca.signed_area},
                   {"abroca_absolute", c.abroca.absolute_area}};
  if (c.similar_block_share) {
    j["similar_block_importance_share"] = *c.similar_block_share;
    j["baseline_reference_share"] = *c.baseline_reference_share;
  }
  return j;
}

inline void write_roc_csv(std::ostream& out, const RunReport& rep, const std::string& config_hash = {}) {
  out << "# mousetrail roc macro one-vs-rest variant=" << to_string(rep.variant) << " model=" << to_string(rep.kind);
  if (!config_hash.empty()) out << " config_hash=" << config_hash;
  out << "\nfpr,tpr_mean,tpr_plus_std,tpr_minus_std\n";
  for (std::size_t p = 0; p < rep.mean_curve.points.size(); ++p) {
    const auto& pt = rep.mean_curve.points[p];
    out << text::format_fixed(pt.fpr, 2) << ',' << text::format_fixed(pt.tpr, 9) << ','
        << text::format_fixed(std::min(1.0, pt.tpr + rep.tpr_std[p]), 9) << ','
        << text::format_fixed(std::max(0.0, pt.tpr - rep.tpr_std[p]), 9) << '\n';
  }
}

// Row-normalized proportions: each row is a true class.
inline void write_heatmap_csv(std::ostream& out, const ConfusionMatrix& cm, const std::string& config_hash = {}) {
  out << "# mousetrail confusion heatmap (row-normalized)";
  if (!config_hash.empty()) out << " config_hash=" << config_hash;
  out << "\ntrue_class";
  for (std::size_t j = 0; j < cm.classes(); ++j) out << ",pred_" << j;
  out << '\n';
  const auto rows = cm.row_normalized();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i;
    for (double v : rows[i]) out << ',' << text::format_fixed(v, 6);
    out << '\n';
  }
}

// ---- SVG ---------------------------------------------------------------------------

// ROC bands of several reports on one plot.
inline void write_roc_svg(std::ostream& out, const std::vector<const RunReport*>& reports, const std::string& title) {
  constexpr double W = 420, H = 420, M = 50, S = W - 2 * M;
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  auto px = [&](double fpr) { return M + fpr * S; };
  auto py = [&](double tpr) { return H - M - tpr * S; };
  out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << W << R"(" height=")" << H << R"(">)" << '\n';
  out << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  out << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << S << "\" height=\"" << S
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">false positive rate</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">true positive rate</text>\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& rep = *reports[r];
    const char* color = colors[r % 4];
    const auto& pts = rep.mean_curve.points;
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t p = 0; p < pts.size(); ++p) {
      out << text::format_fixed(px(pts[p].fpr), 2) << ',' << text::format_fixed(py(std::min(1.0, pts[p].tpr + rep.tpr_std[p])), 2) << ' ';
    }
    for (std::size_t p = pts.size(); p-- > 0;) {
      out << text::format_fixed(px(pts[p].fpr), 2) << ',' << text::format_fixed(py(std::max(0.0, pts[p].tpr - rep.tpr_std[p])), 2) << ' ';
    }
    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& pt : pts) out << text::format_fixed(px(pt.fpr), 2) << ',' << text::format_fixed(py(pt.tpr), 2) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << M + 10 << "\" y=\"" << H - M - 12 - 16 * static_cast<double>(reports.size() - 1 - r)
        << "\" fill=\"" << color << "\" font-family=\"sans-serif\" font-size=\"12\">" << to_string(rep.variant) << ' '
        << to_string(rep.kind) << " AUC " << text::format_fixed(auc(rep.mean_curve), 3) << "</text>\n";
  }
  out << "</svg>\n";
}

inline void write_heatmap_svg(std::ostream& out, const ConfusionMatrix& cm, const std::string& title) {
  const auto rows = cm.row_normalized();
  const double cell = 70, M = 60;
  const double W = M * 1.5 + cell * static_cast<double>(rows.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const double v = rows[i][j];
      const int shade = static_cast<int>(std::lround(255 * (1 - v)));
      const double x = M + cell * static_cast<double>(j), y = M + cell * static_cast<double>(i);
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
          << shade << ',' << shade << ",255)\" stroke=\"white\"/>\n";
      out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << (v > 0.5 ? "white" : "black")
          << "\">" << text::format_fixed(v, 2) << "</text>\n";
    }
    out << "<text x=\"" << M - 8 << "\" y=\"" << M + cell * (static_cast<double>(i) + 0.5) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << i << "</text>\n";
    out << "<text x=\"" << M + cell * (static_cast<double>(i) + 0.5) << "\" y=\"" << M - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << i << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace mousetrail
