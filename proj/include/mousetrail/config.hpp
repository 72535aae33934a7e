#pragma once

// Pipeline configuration: a key=value text file, optionally overridden by
// command-line flags, plus a stable hash of the effective settings.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mousetrail/changepoint.hpp"
#include "mousetrail/error.hpp"
#include "mousetrail/labeled.hpp"
#include "mousetrail/models.hpp"
#include "mousetrail/rng.hpp"
#include "mousetrail/text.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

using ConfigMap = std::map<std::string, std::string>;

inline constexpr std::array<std::string_view, 19> kConfigKeys = {
    "trajectories", "submissions",  "questions",           "out_dir",        "window_size",
    "density_threshold", "score_bins", "recent_window_days", "experiment_start_date", "sim_threshold",
    "variant",      "model",        "n_runs",              "seed",           "test_fraction",
    "smote_k",      "jobs",         "session_gap_minutes", "grid_search"};

struct PipelineConfig {
  std::string trajectories;
  std::string submissions;
  std::string questions;
  std::string out_dir = "mousetrail-out";
  DensityParams density;
  ScoreClassBins bins;
  int recent_window_days = 14;
  std::optional<TimestampMs> experiment_start;
  double sim_threshold = 0.8;
  std::vector<Variant> variants{Variant::Baseline, Variant::Proposed};
  std::vector<ModelKind> models{ModelKind::GBDT};
  int n_runs = 10;
  std::uint64_t seed = 42;
  double test_fraction = 0.3;
  int smote_k = 5;
  unsigned jobs = 1;
  int session_gap_minutes = 30;
  bool grid_search = false;

  ParseOptions parse_options() const { return {static_cast<TimestampMs>(session_gap_minutes) * 60'000}; }

  TimestampMs require_experiment_start() const {
    if (!experiment_start) throw Error(ErrorCode::ConfigError, "experiment_start_date is not set");
    return *experiment_start;
  }

  // Canonical key=value rendering of every setting, sorted by key. Input paths
  // are excluded so relocating the data does not change the hash.
  std::string canonical() const {
    ConfigMap m;
    m["window_size"] = std::to_string(density.window_size);
    m["density_threshold"] = density.threshold ? text::format_double(*density.threshold) : "auto";
    m["score_bins"] = std::to_string(bins.edges()[0]) + ";" + std::to_string(bins.edges()[1]) + ";" +
                      std::to_string(bins.edges()[2]);
    m["recent_window_days"] = std::to_string(recent_window_days);
    m["experiment_start_date"] = experiment_start ? std::to_string(*experiment_start) : "unset";
    m["sim_threshold"] = text::format_double(sim_threshold);
    std::vector<std::string> v, k;
    for (auto x : variants) v.emplace_back(to_string(x));
    for (auto x : models) k.emplace_back(to_string(x));
    m["variant"] = text::join(v, ";");
    m["model"] = text::join(k, ";");
    m["n_runs"] = std::to_string(n_runs);
    m["seed"] = std::to_string(seed);
    m["test_fraction"] = text::format_double(test_fraction);
    m["smote_k"] = std::to_string(smote_k);
    m["session_gap_minutes"] = std::to_string(session_gap_minutes);
    m["grid_search"] = grid_search ? "true" : "false";
    std::string out;
    for (const auto& [key, value] : m) out += key + "=" + value + "\n";
    return out;
  }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
  }
};

// Reads `key = value` lines; '#' starts a comment line.
inline ConfigMap read_config_map(std::istream& in) {
  ConfigMap m;
  std::string line;
  std::size_t line_no = 0;
  while (text::next_data_line(in, line, line_no)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    m[std::string(text::trim(std::string_view(line).substr(0, eq)))] =
        std::string(text::trim(std::string_view(line).substr(eq + 1)));
  }
  return m;
}

namespace detail {

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::ConfigError, "invalid value for " + key + ": '" + value + "'");
}

inline std::int64_t config_int(const std::string& key, const std::string& value, std::int64_t lo, std::int64_t hi) {
  const auto v = text::parse_int(value);
  if (!v || *v < lo || *v > hi) bad_value(key, value);
  return *v;
}

inline double config_double(const std::string& key, const std::string& value) {
  const auto v = text::parse_double(value);
  if (!v || !std::isfinite(*v)) bad_value(key, value);
  return *v;
}

// YYYY-MM-DD (UTC midnight) or a raw millisecond timestamp.
inline TimestampMs parse_date(const std::string& key, const std::string& value) {
  if (auto ms = text::parse_int(value)) return *ms;
  const auto parts = text::split(value, '-');
  if (parts.size() != 3) bad_value(key, value);
  const auto y = text::parse_int(parts[0]);
  const auto mo = text::parse_int(parts[1]);
  const auto d = text::parse_int(parts[2]);
  if (!y || !mo || !d) bad_value(key, value);
  using namespace std::chrono;
  const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) bad_value(key, value);
  return duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
}

}  // namespace detail

// Applies settings on top of `cfg`. Unknown keys and malformed values are
// configuration errors.
inline void apply_config(PipelineConfig& cfg, const ConfigMap& m) {
  for (const auto& [key, value] : m) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
    if (key == "trajectories") cfg.trajectories = value;
    else if (key == "submissions") cfg.submissions = value;
    else if (key == "questions") cfg.questions = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "window_size") cfg.density.window_size = static_cast<int>(detail::config_int(key, value, 2, 1'000'000));
    else if (key == "density_threshold") {
      if (value == "auto") {
        cfg.density.threshold.reset();
      } else {
        const double t = detail::config_double(key, value);
        if (t < 0.0 || t > 1.0) detail::bad_value(key, value);
        cfg.density.threshold = t;
      }
    } else if (key == "score_bins") {
      const auto parts = text::split(value, ';');
      if (parts.size() != 3) detail::bad_value(key, value);
      std::array<int, 3> edges{};
      for (std::size_t i = 0; i < 3; ++i) edges[i] = static_cast<int>(detail::config_int(key, std::string(parts[i]), 0, 99));
      try {
        cfg.bins = ScoreClassBins(edges);
      } catch (const Error&) {
        detail::bad_value(key, value);
      }
    } else if (key == "recent_window_days") cfg.recent_window_days = static_cast<int>(detail::config_int(key, value, 1, 36'500));
    else if (key == "experiment_start_date") cfg.experiment_start = detail::parse_date(key, value);
    else if (key == "sim_threshold") {
      cfg.sim_threshold = detail::config_double(key, value);
      if (cfg.sim_threshold < 0.0 || cfg.sim_threshold > 1.0) detail::bad_value(key, value);
    } else if (key == "variant") {
      if (value == "both") {
        cfg.variants = {Variant::Baseline, Variant::Proposed};
      } else {
        try {
          cfg.variants = {parse_variant(value)};
        } catch (const Error&) {
          detail::bad_value(key, value);
        }
      }
    } else if (key == "model") {
      cfg.models.clear();
      for (auto part : text::split(value, ';')) {
        try {
          cfg.models.push_back(parse_model_kind(text::trim(part)));
        } catch (const Error&) {
          detail::bad_value(key, value);
        }
      }
    } else if (key == "n_runs") cfg.n_runs = static_cast<int>(detail::config_int(key, value, 1, 10'000));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::config_int(key, value, 0, INT64_MAX));
    else if (key == "test_fraction") {
      cfg.test_fraction = detail::config_double(key, value);
      if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) detail::bad_value(key, value);
    } else if (key == "smote_k") cfg.smote_k = static_cast<int>(detail::config_int(key, value, 1, 1000));
    else if (key == "jobs") cfg.jobs = static_cast<unsigned>(detail::config_int(key, value, 1, 1024));
    else if (key == "session_gap_minutes") cfg.session_gap_minutes = static_cast<int>(detail::config_int(key, value, 1, 100'000));
    else if (key == "grid_search") {
      if (value == "true" || value == "1") cfg.grid_search = true;
      else if (value == "false" || value == "0") cfg.grid_search = false;
      else detail::bad_value(key, value);
    }
  }
}

// Resolves relative paths in a config file's entries against the file's directory.
inline void resolve_paths(ConfigMap& m, const std::filesystem::path& base) {
  for (const char* key : {"trajectories", "submissions", "questions", "out_dir"}) {
    auto it = m.find(key);
    if (it != m.end() && !it->second.empty() && std::filesystem::path(it->second).is_relative()) {
      it->second = (base / it->second).lexically_normal().string();
    }
  }
}

inline LogFormat format_for(const std::string& path) {
  return std::filesystem::path(path).extension() == ".jsonl" ? LogFormat::Jsonl : LogFormat::Csv;
}

}  // namespace mousetrail
