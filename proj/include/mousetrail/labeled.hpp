#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mousetrail/error.hpp"
#include "mousetrail/text.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

enum class Variant { Baseline, Proposed };

constexpr std::string_view to_string(Variant v) { return v == Variant::Baseline ? "baseline" : "proposed"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "proposed") return Variant::Proposed;
  throw Error(ErrorCode::ConfigError, "unknown variant '" + std::string(s) + "'");
}

struct ExampleKey {
  StudentId student;
  QuestionId question;
  TimestampMs submitted_at = 0;

  friend auto operator<=>(const ExampleKey&, const ExampleKey&) = default;
  friend bool operator==(const ExampleKey&, const ExampleKey&) = default;
};

// Provenance of an oversampled point: base + lambda * (neighbor - base), where
// base and neighbor index the original training list.
struct SyntheticOrigin {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double lambda = 0.0;
  friend bool operator==(const SyntheticOrigin&, const SyntheticOrigin&) = default;
};

struct LabeledExample {
  ExampleKey key;
  std::vector<double> features;
  int label = 0;
  std::optional<SyntheticOrigin> synthetic;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct Dataset {
  Variant variant = Variant::Baseline;
  std::vector<std::string> feature_names;
  std::vector<LabeledExample> examples;
};

// CSV: key columns, every named feature column, then `label`. Values are
// written in shortest round-trip form so a reload is bit-exact.
inline void write_dataset(std::ostream& out, const Dataset& ds, const std::string& config_hash = {}) {
  out << "# mousetrail dataset variant=" << to_string(ds.variant);
  if (!config_hash.empty()) out << " config_hash=" << config_hash;
  out << '\n' << "student_id,question_id,submitted_at_ms";
  for (const auto& n : ds.feature_names) out << ',' << n;
  out << ",label\n";
  for (const auto& e : ds.examples) {
    out << e.key.student.value << ',' << e.key.question.value << ',' << e.key.submitted_at;
    for (double v : e.features) out << ',' << text::format_double(v);
    out << ',' << e.label << '\n';
  }
}

inline Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (in.peek() == '#') {
    std::getline(in, line);
    ++line_no;
    const auto pos = line.find("variant=");
    if (pos != std::string::npos) {
      auto rest = std::string_view(line).substr(pos + 8);
      ds.variant = parse_variant(rest.substr(0, rest.find(' ')));
    }
  }
  if (!text::next_data_line(in, line, line_no)) throw Error(ErrorCode::MalformedRow, "empty dataset file");
  const auto header = text::split(line);
  if (header.size() < 4 || header[0] != "student_id" || header.back() != "label") {
    throw Error(ErrorCode::MalformedRow, "bad dataset header");
  }
  for (std::size_t i = 3; i + 1 < header.size(); ++i) ds.feature_names.emplace_back(header[i]);
  while (text::next_data_line(in, line, line_no)) {
    const auto f = text::split(line);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "dataset line " + std::to_string(line_no) + ": field count");
    }
    LabeledExample e;
    e.key.student.value = std::string(f[0]);
    e.key.question.value = std::string(f[1]);
    const auto ts = text::parse_int(f[2]);
    const auto label = text::parse_int(f.back());
    if (!ts || !label || *label < 0 || *label >= kNumClasses) {
      throw Error(ErrorCode::MalformedRow, "dataset line " + std::to_string(line_no));
    }
    e.key.submitted_at = *ts;
    e.label = static_cast<int>(*label);
    for (std::size_t i = 3; i + 1 < f.size(); ++i) {
      const auto v = text::parse_double(f[i]);
      if (!v) throw Error(ErrorCode::MalformedRow, "dataset line " + std::to_string(line_no) + ": value");
      e.features.push_back(*v);
    }
    ds.examples.push_back(std::move(e));
  }
  return ds;
}

}  // namespace mousetrail
