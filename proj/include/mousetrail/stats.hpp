#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mousetrail {

// Value used for every feature whose source data is absent.
inline constexpr double kMissing = -1.0;

namespace stats {

// Accumulates offsets from the first value, so a constant list averages to
// exactly that constant.
inline double mean(std::span<const double> values) {
  if (values.empty()) return kMissing;
  const double base = values.front();
  double offset = 0.0;
  for (double v : values) offset += v - base;
  return base + offset / static_cast<double>(values.size());
}

// Linear-interpolation quantile (Hyndman-Fan type 7) of an already sorted list.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return kMissing;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> values, double q) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, q);
}

inline double median(std::span<const double> values) { return quantile(values, 0.5); }

inline double iqr(std::span<const double> values) {
  if (values.empty()) return kMissing;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
}

// Population standard deviation (divides by n).
inline double population_stddev(std::span<const double> values) {
  if (values.empty()) return kMissing;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

struct Summary {
  double median = kMissing;
  double mean = kMissing;
  double iqr = kMissing;
};

inline Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return {sorted_quantile(sorted, 0.5), mean(values),
          sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25)};
}

}  // namespace stats
}  // namespace mousetrail
