#pragma once

// Multiclass classifiers: softmax regression, random forest and gradient
// boosted trees, plus grid search and impurity-based feature importance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mousetrail/dataset.hpp"
#include "mousetrail/error.hpp"
#include "mousetrail/labeled.hpp"
#include "mousetrail/log.hpp"
#include "mousetrail/rng.hpp"
#include "mousetrail/tree.hpp"

namespace mousetrail {

using tree::FeatureMatrix;
using Probabilities = std::array<double, kNumClasses>;

enum class ModelKind { LR, RF, GBDT };

constexpr std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LR: return "lr";
    case ModelKind::RF: return "rf";
    case ModelKind::GBDT: return "gbdt";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "lr") return ModelKind::LR;
  if (s == "rf") return ModelKind::RF;
  if (s == "gbdt") return ModelKind::GBDT;
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + std::string(s) + "'");
}

inline constexpr std::array<std::string_view, 6> kHyperparameterNames = {
    "n_trees", "max_depth", "learning_rate", "l2", "epochs", "feature_subsample"};

// Recorded for completeness; no SVM is trained.
inline constexpr std::array<double, 4> kSvmPenaltyGrid = {0.1, 1, 5, 10};

struct ModelSpec {
  ModelKind kind = ModelKind::GBDT;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  // Defaults: trees 250 / depth 5 / learning rate 1e-3 for the ensembles;
  // step 0.1, l2 1e-3, 500 epochs for softmax regression. A forest's
  // feature_subsample of 0 means ceil(sqrt(d)) features per split.
  static ModelSpec defaults(ModelKind kind, std::uint64_t seed = 0) {
    ModelSpec s{kind, {}, seed};
    switch (kind) {
      case ModelKind::LR:
        s.params = {{"learning_rate", 0.1}, {"l2", 1e-3}, {"epochs", 500}};
        break;
      case ModelKind::RF:
        s.params = {{"n_trees", 250}, {"max_depth", 5}, {"feature_subsample", 0}};
        break;
      case ModelKind::GBDT:
        s.params = {{"n_trees", 250}, {"max_depth", 5}, {"learning_rate", 1e-3}, {"feature_subsample", 1}};
        break;
    }
    return s;
  }

  double get(const std::string& name) const {
    auto it = params.find(name);
    if (it != params.end()) return it->second;
    const auto d = defaults(kind);
    auto jt = d.params.find(name);
    if (jt == d.params.end()) throw Error(ErrorCode::InvalidArgument, "no hyperparameter " + name);
    return jt->second;
  }

  void validate() const {
    for (const auto& [name, value] : params) {
      if (std::find(kHyperparameterNames.begin(), kHyperparameterNames.end(), name) == kHyperparameterNames.end()) {
        throw Error(ErrorCode::InvalidArgument, "unknown hyperparameter '" + name + "'");
      }
      const bool may_be_zero = name == "l2" || name == "feature_subsample";
      if (!std::isfinite(value) || value < 0 || (!may_be_zero && value == 0)) {
        throw Error(ErrorCode::InvalidArgument, "hyperparameter " + name + " must be positive");
      }
    }
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline FeatureMatrix to_matrix(std::span<const LabeledExample> examples) {
  FeatureMatrix m;
  m.rows = examples.size();
  m.cols = examples.empty() ? 0 : examples.front().features.size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& e : examples) {
    if (e.features.size() != m.cols) {
      throw Error(ErrorCode::InconsistentFeatureLength, "examples have different feature counts");
    }
    m.data.insert(m.data.end(), e.features.begin(), e.features.end());
  }
  return m;
}

inline void softmax_inplace(std::span<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

inline int argmax(const Probabilities& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

// ---- Softmax regression ------------------------------------------------------

struct LogisticModel {
  std::vector<double> mean;
  std::vector<double> scale;
  // kNumClasses rows of (features + 1) weights; the bias is last.
  std::vector<double> weights;
  std::vector<double> loss_history;
};

// Mean cross-entropy plus (l2 / 2) * |W|^2 (biases excluded) on already
// standardized features, and its gradient in the same layout as the weights.
inline std::pair<double, std::vector<double>> logistic_loss_and_gradient(const FeatureMatrix& x,
                                                                         std::span<const int> labels,
                                                                         std::span<const double> weights,
                                                                         double l2) {
  const std::size_t d = x.cols;
  const std::size_t stride = d + 1;
  std::vector<double> grad(weights.size(), 0.0);
  double loss = 0.0;
  std::array<double, kNumClasses> z{};
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    for (int c = 0; c < kNumClasses; ++c) {
      const double* w = weights.data() + static_cast<std::size_t>(c) * stride;
      double s = w[d];
      for (std::size_t j = 0; j < d; ++j) s += w[j] * row[j];
      z[c] = s;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_sum = mx + std::log(sum);
    loss -= z[static_cast<std::size_t>(labels[i])] - log_sum;
    for (int c = 0; c < kNumClasses; ++c) {
      const double residual = std::exp(z[c] - log_sum) - (labels[i] == c ? 1.0 : 0.0);
      double* g = grad.data() + static_cast<std::size_t>(c) * stride;
      for (std::size_t j = 0; j < d; ++j) g[j] += residual * row[j];
      g[d] += residual;
    }
  }
  const double n = static_cast<double>(x.rows);
  loss /= n;
  for (auto& g : grad) g /= n;
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = static_cast<std::size_t>(c) * stride + j;
      loss += 0.5 * l2 * weights[k] * weights[k];
      grad[k] += l2 * weights[k];
    }
  }
  return {loss, std::move(grad)};
}

inline FeatureMatrix standardize(const FeatureMatrix& x, std::span<const double> mean, std::span<const double> scale) {
  FeatureMatrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) out.data[i * x.cols + j] = (x.at(i, j) - mean[j]) / scale[j];
  }
  return out;
}

// Full-batch gradient descent from zero weights; a step that would raise the
// loss is retried at half the step size.
inline LogisticModel fit_logistic(const FeatureMatrix& x, std::span<const int> labels, const ModelSpec& spec) {
  LogisticModel m;
  m.mean.assign(x.cols, 0.0);
  m.scale.assign(x.cols, 1.0);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) s += x.at(i, j);
    m.mean[j] = s / static_cast<double>(x.rows);
    double v = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) v += (x.at(i, j) - m.mean[j]) * (x.at(i, j) - m.mean[j]);
    const double sd = std::sqrt(v / static_cast<double>(x.rows));
    m.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  const auto xs = standardize(x, m.mean, m.scale);
  const double l2 = spec.get("l2");
  double step = spec.get("learning_rate");
  const auto epochs = static_cast<int>(spec.get("epochs"));

  m.weights.assign(static_cast<std::size_t>(kNumClasses) * (x.cols + 1), 0.0);
  auto [loss, grad] = logistic_loss_and_gradient(xs, labels, m.weights, l2);
  m.loss_history.push_back(loss);
  std::vector<double> trial(m.weights.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int attempt = 0; attempt < 40; ++attempt) {
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = m.weights[k] - step * grad[k];
      auto [trial_loss, trial_grad] = logistic_loss_and_gradient(xs, labels, trial, l2);
      if (trial_loss <= loss) {
        m.weights.swap(trial);
        loss = trial_loss;
        grad = std::move(trial_grad);
        break;
      }
      step *= 0.5;
    }
    m.loss_history.push_back(loss);
  }
  return m;
}

inline Probabilities predict_logistic(const LogisticModel& m, std::span<const double> x) {
  const std::size_t d = m.mean.size();
  Probabilities z{};
  for (int c = 0; c < kNumClasses; ++c) {
    const double* w = m.weights.data() + static_cast<std::size_t>(c) * (d + 1);
    double s = w[d];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * (x[j] - m.mean[j]) / m.scale[j];
    z[c] = s;
  }
  softmax_inplace(z);
  return z;
}

// ---- Random forest -------------------------------------------------------------

inline constexpr std::size_t kMaxBins = 64;

struct ForestModel {
  std::vector<tree::Tree> trees;
};

inline std::size_t features_per_split(double subsample, std::size_t d) {
  if (subsample <= 0.0) return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  if (subsample <= 1.0) return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(subsample * static_cast<double>(d))));
  return std::min(d, static_cast<std::size_t>(subsample));
}

inline std::pair<ForestModel, std::vector<double>> fit_forest(const FeatureMatrix& x, std::span<const int> labels,
                                                              const ModelSpec& spec, unsigned jobs = 1) {
  const tree::Binning bins(x, kMaxBins);
  const auto codes = bins.encode(x);
  const auto n_trees = static_cast<std::size_t>(spec.get("n_trees"));
  tree::ClassificationParams params;
  params.max_depth = static_cast<int>(spec.get("max_depth"));
  params.features_per_split = features_per_split(spec.get("feature_subsample"), x.cols);

  ForestModel model;
  model.trees.resize(n_trees);
  std::vector<std::vector<double>> gains(n_trees, std::vector<double>(x.cols, 0.0));
  auto grow_one = [&](std::size_t t) {
    auto rng = make_rng(spec.seed, "forest-tree", t);
    std::vector<std::size_t> sample(x.rows);
    for (auto& s : sample) s = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(x.rows) - 1));
    tree::GiniTreeBuilder builder(bins, codes, x, labels, params, rng, gains[t]);
    model.trees[t] = builder.build(std::move(sample));
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    for (std::size_t t = 0; t < n_trees; ++t) grow_one(t);
  } else {
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t t = w; t < n_trees; t += jobs) grow_one(t);
      });
    }
    for (auto& th : workers) th.join();
  }
  std::vector<double> importance(x.cols, 0.0);
  for (const auto& g : gains) {
    for (std::size_t f = 0; f < x.cols; ++f) importance[f] += g[f];
  }
  return {std::move(model), std::move(importance)};
}

inline Probabilities predict_forest(const ForestModel& m, std::span<const double> x) {
  Probabilities p{};
  for (const auto& t : m.trees) {
    const auto& leaf = t.leaf_for(x);
    for (int c = 0; c < kNumClasses; ++c) p[c] += leaf.value[c];
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return p;
}

// ---- Gradient boosted trees -----------------------------------------------------

struct BoostedModel {
  Probabilities initial{};  // log class priors
  // rounds x kNumClasses trees; leaf values already include the step size.
  std::vector<std::array<tree::Tree, kNumClasses>> rounds;
  std::vector<double> loss_history;
};

inline double softmax_log_loss(std::span<const double> scores, std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* z = scores.data() + i * kNumClasses;
    const double mx = *std::max_element(z, z + kNumClasses);
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) sum += std::exp(z[c] - mx);
    loss -= z[labels[i]] - mx - std::log(sum);
  }
  return loss / static_cast<double>(labels.size());
}

// One regression tree per class per round on the softmax log-loss gradient,
// with Newton leaf values scaled by (K-1)/K. A round whose step would raise the
// training loss is retried at half the step and dropped if it never helps.
inline std::pair<BoostedModel, std::vector<double>> fit_boosting(const FeatureMatrix& x, std::span<const int> labels,
                                                                 const ModelSpec& spec) {
  const tree::Binning bins(x, kMaxBins);
  const auto codes = bins.encode(x);
  const auto n_rounds = static_cast<std::size_t>(spec.get("n_trees"));
  const double lr = spec.get("learning_rate");
  const std::size_t n_features = features_per_split(spec.get("feature_subsample"), x.cols);
  tree::RegressionParams params;
  params.max_depth = static_cast<int>(spec.get("max_depth"));
  params.leaf_scale = static_cast<double>(kNumClasses - 1) / kNumClasses;

  const std::size_t n = x.rows;
  BoostedModel model;
  std::array<double, kNumClasses> counts{};
  for (int y : labels) counts[static_cast<std::size_t>(y)] += 1.0;
  for (int c = 0; c < kNumClasses; ++c) {
    model.initial[c] = std::log(std::max(counts[c], 1e-3) / static_cast<double>(n));
  }
  std::vector<double> scores(n * kNumClasses);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < kNumClasses; ++c) scores[i * kNumClasses + c] = model.initial[c];
  }
  double loss = softmax_log_loss(scores, labels);
  model.loss_history.push_back(loss);

  std::vector<double> importance(x.cols, 0.0);
  std::vector<double> prob(n * kNumClasses), grad(n), hess(n), trial(scores.size());
  std::vector<std::vector<double>> outputs(kNumClasses, std::vector<double>(n));
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  auto rng = make_rng(spec.seed, "boosting-features");

  for (std::size_t round = 0; round < n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> p(prob.data() + i * kNumClasses, kNumClasses);
      std::copy_n(scores.data() + i * kNumClasses, kNumClasses, p.begin());
      softmax_inplace(p);
    }
    std::array<tree::Tree, kNumClasses> trees;
    std::vector<std::vector<double>> round_gains(kNumClasses, std::vector<double>(x.cols, 0.0));
    for (int c = 0; c < kNumClasses; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i * kNumClasses + c];
        grad[i] = (labels[i] == c ? 1.0 : 0.0) - p;
        hess[i] = p * (1.0 - p);
      }
      const auto feats = tree::sample_features(x.cols, n_features, rng);
      tree::GradientTreeBuilder builder(bins, codes, x.cols, grad, hess, params);
      trees[c] = builder.build(all, feats, outputs[c], round_gains[c]);
    }

    double step = lr;
    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < kNumClasses; ++c) {
          trial[i * kNumClasses + c] = scores[i * kNumClasses + c] + step * outputs[c][i];
        }
      }
      const double trial_loss = softmax_log_loss(trial, labels);
      if (trial_loss <= loss) {
        scores.swap(trial);
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    model.loss_history.push_back(loss);
    if (!accepted) continue;
    for (int c = 0; c < kNumClasses; ++c) {
      for (auto& node : trees[c].nodes) node.value[0] *= step;
      for (std::size_t f = 0; f < x.cols; ++f) importance[f] += round_gains[c][f];
    }
    model.rounds.push_back(std::move(trees));
  }
  return {std::move(model), std::move(importance)};
}

inline Probabilities predict_boosting(const BoostedModel& m, std::span<const double> x) {
  Probabilities z = m.initial;
  for (const auto& round : m.rounds) {
    for (int c = 0; c < kNumClasses; ++c) z[c] += round[c].leaf_for(x).value[0];
  }
  softmax_inplace(z);
  return z;
}

// ---- Trained model facade ------------------------------------------------------

class TrainedModel {
 public:
  using Fitted = std::variant<LogisticModel, ForestModel, BoostedModel>;

  TrainedModel(ModelSpec spec, std::size_t feature_count, Fitted fitted, std::optional<std::vector<double>> importance)
      : spec_(std::move(spec)), feature_count_(feature_count), fitted_(std::move(fitted)),
        importance_(std::move(importance)) {}

  ModelKind kind() const { return spec_.kind; }
  const ModelSpec& spec() const { return spec_; }
  std::size_t feature_count() const { return feature_count_; }
  const Fitted& fitted() const { return fitted_; }
  const std::optional<std::vector<double>>& importance() const { return importance_; }

  Probabilities predict_proba(std::span<const double> x) const {
    if (x.size() != feature_count_) {
      throw Error(ErrorCode::FeatureLengthMismatch,
                  "expected " + std::to_string(feature_count_) + " features, got " + std::to_string(x.size()));
    }
    return std::visit(
        [&](const auto& m) -> Probabilities {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LogisticModel>) return predict_logistic(m, x);
          else if constexpr (std::is_same_v<T, ForestModel>) return predict_forest(m, x);
          else return predict_boosting(m, x);
        },
        fitted_);
  }

  int predict(std::span<const double> x) const { return argmax(predict_proba(x)); }

 private:
  ModelSpec spec_;
  std::size_t feature_count_;
  Fitted fitted_;
  std::optional<std::vector<double>> importance_;
};

inline std::optional<std::vector<double>> normalize_importance(std::vector<double> raw) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(total > 0.0)) return std::nullopt;
  for (auto& v : raw) v /= total;
  return raw;
}

inline TrainedModel train(const ModelSpec& spec, const FeatureMatrix& x, std::span<const int> labels,
                          unsigned jobs = 1) {
  spec.validate();
  if (x.rows != labels.size()) throw Error(ErrorCode::InconsistentFeatureLength, "label count mismatch");
  std::array<bool, kNumClasses> present{};
  for (int y : labels) {
    if (y < 0 || y >= kNumClasses) throw Error(ErrorCode::InvalidArgument, "label outside [0,3]");
    present[static_cast<std::size_t>(y)] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw Error(ErrorCode::SingleClassTrainingSet, "need at least two classes");
  }
  switch (spec.kind) {
    case ModelKind::LR:
      return TrainedModel(spec, x.cols, fit_logistic(x, labels, spec), std::nullopt);
    case ModelKind::RF: {
      auto [m, imp] = fit_forest(x, labels, spec, jobs);
      return TrainedModel(spec, x.cols, std::move(m), normalize_importance(std::move(imp)));
    }
    case ModelKind::GBDT: {
      auto [m, imp] = fit_boosting(x, labels, spec);
      return TrainedModel(spec, x.cols, std::move(m), normalize_importance(std::move(imp)));
    }
  }
  throw Error(ErrorCode::UnsupportedModelKind, "unknown model kind");
}

inline std::vector<int> labels_of(std::span<const LabeledExample> examples) {
  std::vector<int> y;
  y.reserve(examples.size());
  for (const auto& e : examples) y.push_back(e.label);
  return y;
}

inline TrainedModel train(const ModelSpec& spec, std::span<const LabeledExample> examples, unsigned jobs = 1) {
  if (examples.empty()) throw Error(ErrorCode::SingleClassTrainingSet, "empty training set");
  const auto x = to_matrix(examples);
  const auto y = labels_of(examples);
  return train(spec, x, y, jobs);
}

// Per-feature impurity decrease weighted by node size, summed over every tree
// and normalized to 1. All zeros when no tree ever split.
inline std::vector<double> gini_importance(const TrainedModel& model) {
  if (model.kind() == ModelKind::LR) {
    throw Error(ErrorCode::UnsupportedModelKind, "feature importance needs a tree ensemble");
  }
  if (!model.importance()) return std::vector<double>(model.feature_count(), 0.0);
  return *model.importance();
}

// ---- Grid search ---------------------------------------------------------------

// Parameter name -> candidate values, in declaration order.
using ParameterGrid = std::vector<std::pair<std::string, std::vector<double>>>;

inline ParameterGrid default_grid(ModelKind kind) {
  const std::vector<double> trees{50, 100, 150, 200, 250, 300, 350};
  const std::vector<double> depths{5, 10, 15, 20, 25};
  switch (kind) {
    case ModelKind::GBDT:
      return {{"n_trees", trees}, {"max_depth", depths}, {"learning_rate", {1e-4, 1e-3, 1e-2, 5e-2, 0.1, 0.2}}};
    case ModelKind::RF:
      return {{"n_trees", trees}, {"max_depth", depths}};
    case ModelKind::LR:
      return {{"learning_rate", {0.1}}, {"l2", {1e-3}}, {"epochs", {500}}};
  }
  return {};
}

// Cartesian product with the first parameter varying slowest.
inline std::vector<ModelSpec> expand_grid(const ModelSpec& base, const ParameterGrid& grid) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "grid has no parameters");
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw Error(ErrorCode::EmptyGrid, "no values for " + name);
  }
  std::vector<ModelSpec> out{base};
  for (const auto& [name, values] : grid) {
    std::vector<ModelSpec> next;
    for (const auto& spec : out) {
      for (double v : values) {
        auto s = spec;
        s.params[name] = v;
        next.push_back(std::move(s));
      }
    }
    out = std::move(next);
  }
  return out;
}

struct GridSearchResult {
  ModelSpec best;
  std::vector<std::pair<ModelSpec, double>> scores;  // validation accuracy per candidate
};

inline GridSearchResult grid_search(ModelKind kind, const ParameterGrid& grid,
                                    const std::vector<LabeledExample>& train_set, double validation_fraction,
                                    std::uint64_t seed, unsigned jobs = 1) {
  const auto candidates = expand_grid(ModelSpec::defaults(kind, seed), grid);
  const auto split = split_train_test(train_set, validation_fraction, derive_seed(seed, "grid-validation"));
  const auto x = to_matrix(split.train);
  const auto y = labels_of(split.train);
  GridSearchResult result;
  double best_score = -1.0;
  for (const auto& spec : candidates) {
    const auto model = train(spec, x, y, jobs);
    std::size_t correct = 0;
    for (const auto& e : split.test) correct += model.predict(e.features) == e.label;
    const double acc = split.test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(split.test.size());
    result.scores.emplace_back(spec, acc);
    if (acc > best_score) {
      best_score = acc;
      result.best = spec;
    }
  }
  return result;
}

// ---- Serialization -------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tree_to_json(const tree::Tree& t, bool classification) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    if (n.feature < 0) {
      nodes.push_back(classification ? nlohmann::json{{"leaf", n.value}} : nlohmann::json{{"leaf", n.value[0]}});
    } else {
      nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
    }
  }
  return nodes;
}

inline tree::Tree tree_from_json(const nlohmann::json& j, bool classification) {
  tree::Tree t;
  for (const auto& jn : j) {
    tree::Node n;
    if (jn.contains("leaf")) {
      if (classification) {
        n.value = jn.at("leaf").get<Probabilities>();
      } else {
        n.value[0] = jn.at("leaf").get<double>();
      }
    } else {
      n.feature = jn.at("f").get<std::int32_t>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<std::int32_t>();
      n.right = jn.at("r").get<std::int32_t>();
    }
    t.nodes.push_back(n);
  }
  return t;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j{{"format", "mousetrail-model"},
                   {"version", kModelFormatVersion},
                   {"kind", std::string(to_string(model.kind()))},
                   {"seed", model.spec().seed},
                   {"params", model.spec().params},
                   {"feature_count", model.feature_count()}};
  if (model.importance()) j["importance"] = *model.importance();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          j["mean"] = m.mean;
          j["scale"] = m.scale;
          j["weights"] = m.weights;
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          auto& trees = j["trees"] = nlohmann::json::array();
          for (const auto& t : m.trees) trees.push_back(detail::tree_to_json(t, true));
        } else {
          j["initial"] = m.initial;
          auto& rounds = j["rounds"] = nlohmann::json::array();
          for (const auto& r : m.rounds) {
            auto jr = nlohmann::json::array();
            for (const auto& t : r) jr.push_back(detail::tree_to_json(t, false));
            rounds.push_back(std::move(jr));
          }
        }
      },
      model.fitted());
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mousetrail-model") {
      throw Error(ErrorCode::ModelFormat, "not a mousetrail model");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::ModelFormat, "unsupported model version");
    }
    ModelSpec spec{parse_model_kind(j.at("kind").get<std::string>()),
                   j.at("params").get<std::map<std::string, double>>(), j.at("seed").get<std::uint64_t>()};
    const auto features = j.at("feature_count").get<std::size_t>();
    std::optional<std::vector<double>> importance;
    if (j.contains("importance")) importance = j.at("importance").get<std::vector<double>>();
    switch (spec.kind) {
      case ModelKind::LR: {
        LogisticModel m{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>(),
                        j.at("weights").get<std::vector<double>>(), {}};
        return TrainedModel(spec, features, std::move(m), std::nullopt);
      }
      case ModelKind::RF: {
        ForestModel m;
        for (const auto& jt : j.at("trees")) m.trees.push_back(detail::tree_from_json(jt, true));
        return TrainedModel(spec, features, std::move(m), importance);
      }
      case ModelKind::GBDT: {
        BoostedModel m;
        m.initial = j.at("initial").get<Probabilities>();
        for (const auto& jr : j.at("rounds")) {
          std::array<tree::Tree, kNumClasses> r;
          for (int c = 0; c < kNumClasses; ++c) r[c] = detail::tree_from_json(jr.at(c), false);
          m.rounds.push_back(std::move(r));
        }
        return TrainedModel(spec, features, std::move(m), importance);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ModelFormat, e.what());
  }
  throw Error(ErrorCode::ModelFormat, "unknown model kind");
}

}  // namespace mousetrail
