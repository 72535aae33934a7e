#pragma once

// Histogram-binned CART trees shared by the random forest (Gini on class
// counts) and gradient boosting (squared error on gradients).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mousetrail/rng.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail::tree {

// Row-major dense matrix of features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Rank-based bins per feature. Each bin records the largest training value it
// holds; a split "x <= upper" routes unseen values exactly like any strictly
// monotone re-encoding of the feature would.
class Binning {
 public:
  Binning() = default;
  Binning(const FeatureMatrix& x, std::size_t max_bins) : uppers_(x.cols) {
    std::vector<double> column(x.rows);
    for (std::size_t f = 0; f < x.cols; ++f) {
      for (std::size_t i = 0; i < x.rows; ++i) column[i] = x.at(i, f);
      std::sort(column.begin(), column.end());
      std::vector<std::pair<double, std::size_t>> distinct;
      for (double v : column) {
        if (distinct.empty() || distinct.back().first != v) {
          distinct.emplace_back(v, 1);
        } else {
          ++distinct.back().second;
        }
      }
      auto& up = uppers_[f];
      if (distinct.size() <= max_bins) {
        for (const auto& d : distinct) up.push_back(d.first);
      } else {
        std::size_t seen = 0;
        std::size_t bin = 0;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
          seen += distinct[i].second;
          const bool last = i + 1 == distinct.size();
          if (last || seen * max_bins >= (bin + 1) * x.rows) {
            up.push_back(distinct[i].first);
            while (seen * max_bins >= (bin + 1) * x.rows) ++bin;
          }
        }
      }
    }
    offsets_.assign(x.cols + 1, 0);
    for (std::size_t f = 0; f < x.cols; ++f) offsets_[f + 1] = offsets_[f] + uppers_[f].size();
  }

  std::size_t features() const { return uppers_.size(); }
  std::size_t bins(std::size_t f) const { return uppers_[f].size(); }
  std::size_t offset(std::size_t f) const { return offsets_[f]; }
  std::size_t total_bins() const { return offsets_.back(); }
  double upper(std::size_t f, std::size_t b) const { return uppers_[f][b]; }

  std::uint8_t code(std::size_t f, double v) const {
    const auto& up = uppers_[f];
    auto it = std::lower_bound(up.begin(), up.end(), v);
    if (it == up.end()) --it;
    return static_cast<std::uint8_t>(it - up.begin());
  }

  std::vector<std::uint8_t> encode(const FeatureMatrix& x) const {
    std::vector<std::uint8_t> codes(x.rows * x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
      for (std::size_t f = 0; f < x.cols; ++f) codes[i * x.cols + f] = code(f, x.at(i, f));
    }
    return codes;
  }

 private:
  std::vector<std::vector<double>> uppers_;
  std::vector<std::size_t> offsets_;
};

struct Node {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  // Class distribution for forest leaves; value[0] holds the score of a boosting leaf.
  std::array<double, kNumClasses> value{};
};

struct Tree {
  std::vector<Node> nodes;

  const Node& leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }
};

// Picks `count` distinct feature indices out of `total` (partial Fisher-Yates).
inline std::vector<std::size_t> sample_features(std::size_t total, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  if (count >= total) return idx;
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i),
                                                        static_cast<std::int64_t>(total) - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline constexpr double kMinGain = 1e-12;

// ---- Classification tree (Gini) -------------------------------------------

struct ClassificationParams {
  int max_depth = 5;
  std::size_t features_per_split = 1;
};

class GiniTreeBuilder {
 public:
  GiniTreeBuilder(const Binning& bins, const std::vector<std::uint8_t>& codes, const FeatureMatrix& x,
                  std::span<const int> labels, const ClassificationParams& params, Rng& rng,
                  std::vector<double>& importance)
      : bins_(bins), codes_(codes), x_(x), labels_(labels), params_(params), rng_(rng), importance_(importance) {}

  // `samples` may repeat indices (bootstrap multiplicity).
  Tree build(std::vector<std::size_t> samples) {
    Tree t;
    grow(t, std::move(samples), 0);
    return t;
  }

 private:
  using Counts = std::array<double, kNumClasses>;

  static double gini(const Counts& c, double n) {
    if (n <= 0) return 0.0;
    double s = 0.0;
    for (double v : c) s += (v / n) * (v / n);
    return 1.0 - s;
  }

  std::int32_t grow(Tree& t, std::vector<std::size_t> samples, int depth) {
    const auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    Counts total{};
    for (std::size_t i : samples) total[static_cast<std::size_t>(labels_[i])] += 1.0;
    const double n = static_cast<double>(samples.size());
    const double impurity = gini(total, n);
    for (int c = 0; c < kNumClasses; ++c) t.nodes[id].value[c] = total[c] / n;
    if (depth >= params_.max_depth || samples.size() < 2 || impurity <= 0.0) return id;

    const auto feats = sample_features(bins_.features(), params_.features_per_split, rng_);
    double best_gain = kMinGain;
    std::size_t best_f = 0, best_b = 0;
    std::vector<Counts> hist;
    for (std::size_t f : feats) {
      const std::size_t nb = bins_.bins(f);
      if (nb < 2) continue;
      hist.assign(nb, Counts{});
      for (std::size_t i : samples) hist[codes_[i * x_.cols + f]][static_cast<std::size_t>(labels_[i])] += 1.0;
      Counts left{};
      double nl = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        for (int c = 0; c < kNumClasses; ++c) {
          left[c] += hist[b][c];
          nl += hist[b][c];
        }
        if (nl <= 0.0 || nl >= n) continue;
        Counts right{};
        for (int c = 0; c < kNumClasses; ++c) right[c] = total[c] - left[c];
        const double gain = n * impurity - nl * gini(left, nl) - (n - nl) * gini(right, n - nl);
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_b = b;
        }
      }
    }
    if (best_gain <= kMinGain) return id;

    importance_[best_f] += best_gain;
    std::vector<std::size_t> ls, rs;
    for (std::size_t i : samples) (codes_[i * x_.cols + best_f] <= best_b ? ls : rs).push_back(i);
    samples.clear();
    samples.shrink_to_fit();
    t.nodes[id].feature = static_cast<std::int32_t>(best_f);
    t.nodes[id].threshold = bins_.upper(best_f, best_b);
    const auto l = grow(t, std::move(ls), depth + 1);
    const auto r = grow(t, std::move(rs), depth + 1);
    t.nodes[id].left = l;
    t.nodes[id].right = r;
    return id;
  }

  const Binning& bins_;
  const std::vector<std::uint8_t>& codes_;
  const FeatureMatrix& x_;
  std::span<const int> labels_;
  const ClassificationParams& params_;
  Rng& rng_;
  std::vector<double>& importance_;
};

// ---- Regression tree on gradients (squared error) --------------------------

struct RegressionParams {
  int max_depth = 5;
  double leaf_scale = 1.0;  // multiplies the Newton leaf value sum(g)/sum(h)
};

class GradientTreeBuilder {
 public:
  GradientTreeBuilder(const Binning& bins, const std::vector<std::uint8_t>& codes, std::size_t cols,
                      std::span<const double> grad, std::span<const double> hess, const RegressionParams& params)
      : bins_(bins), codes_(codes), cols_(cols), grad_(grad), hess_(hess), params_(params) {}

  // Grows a tree over `features` (sorted indices); writes each training
  // sample's leaf value into `outputs` and per-feature squared-error
  // reductions into `gains`.
  Tree build(std::vector<std::uint32_t> samples, const std::vector<std::size_t>& features,
             std::vector<double>& outputs, std::vector<double>& gains) {
    features_ = &features;
    outputs_ = &outputs;
    gains_ = &gains;
    Tree t;
    auto hist = histogram(samples);
    grow(t, std::move(samples), std::move(hist), 0);
    return t;
  }

 private:
  struct Bin {
    double g = 0.0;
    double h = 0.0;
    double n = 0.0;
  };
  using Hist = std::vector<Bin>;

  Hist histogram(const std::vector<std::uint32_t>& samples) const {
    Hist hist(bins_.total_bins());
    for (std::uint32_t i : samples) {
      const std::uint8_t* row = codes_.data() + static_cast<std::size_t>(i) * cols_;
      const double g = grad_[i];
      const double h = hess_[i];
      for (std::size_t f : *features_) {
        auto& b = hist[bins_.offset(f) + row[f]];
        b.g += g;
        b.h += h;
        b.n += 1.0;
      }
    }
    return hist;
  }

  std::int32_t grow(Tree& t, std::vector<std::uint32_t> samples, Hist hist, int depth) {
    const auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    double g_sum = 0.0, h_sum = 0.0;
    for (std::uint32_t i : samples) {
      g_sum += grad_[i];
      h_sum += hess_[i];
    }
    const double n = static_cast<double>(samples.size());
    const double leaf = h_sum > 1e-12 ? params_.leaf_scale * g_sum / h_sum : 0.0;
    t.nodes[id].value[0] = leaf;

    double best_gain = kMinGain;
    std::size_t best_f = 0, best_b = 0;
    if (depth < params_.max_depth && samples.size() >= 2) {
      const double parent = g_sum * g_sum / n;
      for (std::size_t f : *features_) {
        const std::size_t nb = bins_.bins(f);
        const std::size_t off = bins_.offset(f);
        double gl = 0.0, nl = 0.0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          gl += hist[off + b].g;
          nl += hist[off + b].n;
          if (nl <= 0.0 || nl >= n) continue;
          const double gr = g_sum - gl;
          const double gain = gl * gl / nl + gr * gr / (n - nl) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_f = f;
            best_b = b;
          }
        }
      }
    }
    if (best_gain <= kMinGain) {
      for (std::uint32_t i : samples) (*outputs_)[i] = leaf;
      return id;
    }

    (*gains_)[best_f] += best_gain;
    std::vector<std::uint32_t> ls, rs;
    for (std::uint32_t i : samples) {
      (codes_[static_cast<std::size_t>(i) * cols_ + best_f] <= best_b ? ls : rs).push_back(i);
    }
    samples = {};
    // Histogram the smaller child; the larger one is the parent minus it.
    const bool left_small = ls.size() <= rs.size();
    Hist small = histogram(left_small ? ls : rs);
    for (std::size_t k = 0; k < hist.size(); ++k) {
      hist[k].g -= small[k].g;
      hist[k].h -= small[k].h;
      hist[k].n -= small[k].n;
    }
    Hist left_hist = left_small ? std::move(small) : std::move(hist);
    Hist right_hist = left_small ? std::move(hist) : std::move(small);

    t.nodes[id].feature = static_cast<std::int32_t>(best_f);
    t.nodes[id].threshold = bins_.upper(best_f, best_b);
    const auto l = grow(t, std::move(ls), std::move(left_hist), depth + 1);
    const auto r = grow(t, std::move(rs), std::move(right_hist), depth + 1);
    t.nodes[id].left = l;
    t.nodes[id].right = r;
    return id;
  }

  const Binning& bins_;
  const std::vector<std::uint8_t>& codes_;
  std::size_t cols_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const RegressionParams& params_;
  const std::vector<std::size_t>* features_ = nullptr;
  std::vector<double>* outputs_ = nullptr;
  std::vector<double>* gains_ = nullptr;
};

}  // namespace mousetrail::tree
