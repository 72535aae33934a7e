#pragma once

// Core data model: mouse events, trajectories, graded submissions, question
// metadata, and the log formats they are read from and written to.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mousetrail/error.hpp"
#include "mousetrail/text.hpp"

namespace mousetrail {

using TimestampMs = std::int64_t;

inline constexpr TimestampMs kMsPerDay = 86'400'000;
inline constexpr int kNumClasses = 4;

template <class Tag>
struct Id {
  std::string value;

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value; }
};

using StudentId = Id<struct StudentTag>;
using QuestionId = Id<struct QuestionTag>;

enum class EventKind { Move, Down, Drag, Up };

constexpr std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Move: return "move";
    case EventKind::Down: return "down";
    case EventKind::Drag: return "drag";
    case EventKind::Up: return "up";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "move") return EventKind::Move;
  if (s == "down") return EventKind::Down;
  if (s == "drag") return EventKind::Drag;
  if (s == "up") return EventKind::Up;
  return std::nullopt;
}

struct MouseEvent {
  TimestampMs timestamp = 0;
  EventKind kind = EventKind::Move;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const MouseEvent&, const MouseEvent&) = default;
};

// One uninterrupted session of a student on a question. Events are non-empty
// and sorted by timestamp; construction enforces both.
class Trajectory {
 public:
  Trajectory(StudentId student, QuestionId question, std::vector<MouseEvent> events)
      : student_(std::move(student)), question_(std::move(question)), events_(std::move(events)) {
    if (events_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "trajectory needs at least one event");
    }
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (!std::isfinite(e.x) || !std::isfinite(e.y)) {
        throw Error(ErrorCode::InvalidArgument, "non-finite coordinate at event " + std::to_string(i));
      }
      if (i > 0 && e.timestamp < events_[i - 1].timestamp) {
        throw Error(ErrorCode::NonMonotoneTimestamps,
                    "event " + std::to_string(i) + " precedes its predecessor");
      }
    }
  }

  const StudentId& student() const noexcept { return student_; }
  const QuestionId& question() const noexcept { return question_; }
  const std::vector<MouseEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  TimestampMs opened_at() const noexcept { return events_.front().timestamp; }
  TimestampMs closed_at() const noexcept { return events_.back().timestamp; }
  TimestampMs duration() const noexcept { return closed_at() - opened_at(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  StudentId student_;
  QuestionId question_;
  std::vector<MouseEvent> events_;
};

// Three interior cut points splitting the 0-100 score range into classes 0..3:
// [0,e1], (e1,e2], (e2,e3], (e3,100].
class ScoreClassBins {
 public:
  ScoreClassBins() = default;
  explicit ScoreClassBins(std::array<int, 3> edges) : edges_(edges) {
    if (!(0 <= edges_[0] && edges_[0] < edges_[1] && edges_[1] < edges_[2] && edges_[2] < 100)) {
      throw Error(ErrorCode::InvalidArgument,
                  "score bin edges must satisfy 0 <= e1 < e2 < e3 < 100");
    }
  }

  const std::array<int, 3>& edges() const noexcept { return edges_; }

  friend bool operator==(const ScoreClassBins&, const ScoreClassBins&) = default;

 private:
  std::array<int, 3> edges_{25, 50, 75};
};

inline int map_score_to_class(int raw_score, const ScoreClassBins& bins) {
  if (raw_score < 0 || raw_score > 100) {
    throw Error(ErrorCode::OutOfRangeScore, "score " + std::to_string(raw_score) + " outside [0,100]");
  }
  const auto& e = bins.edges();
  return static_cast<int>(std::count_if(e.begin(), e.end(), [&](int edge) { return raw_score > edge; }));
}

struct SubmissionRecord {
  StudentId student;
  QuestionId question;
  TimestampMs submitted_at = 0;
  int attempt_index = 1;
  int raw_score = 0;
  int score_class = 0;

  friend bool operator==(const SubmissionRecord&, const SubmissionRecord&) = default;
};

struct QuestionMeta {
  QuestionId question;
  std::string math_dimension;
  int grade = 0;
  int difficulty = 1;

  friend bool operator==(const QuestionMeta&, const QuestionMeta&) = default;
};

enum class LogFormat { Csv, Jsonl };

struct ParseOptions {
  // Consecutive events of one (student, question) separated by more than this
  // start a new trajectory.
  TimestampMs session_gap_ms = 30 * 60 * 1000;
};

namespace detail {

inline Error row_error(ErrorCode code, std::size_t line_no, const std::string& what) {
  return Error(code, "line " + std::to_string(line_no) + ": " + what);
}

template <class Fn>
void for_each_row(std::istream& in, LogFormat format, std::string_view expected_header,
                  const std::vector<std::string>& json_keys, Fn&& on_row) {
  std::string line;
  std::size_t line_no = 0;
  const auto columns = text::split(expected_header);
  if (format == LogFormat::Csv) {
    if (!text::next_data_line(in, line, line_no)) return;
    if (text::trim(line) != expected_header) {
      throw row_error(ErrorCode::MalformedRow, line_no,
                      "expected header '" + std::string(expected_header) + "'");
    }
    while (text::next_data_line(in, line, line_no)) {
      auto fields = text::split(line);
      if (fields.size() != columns.size()) {
        throw row_error(ErrorCode::MalformedRow, line_no,
                        "expected " + std::to_string(columns.size()) + " fields, got " +
                            std::to_string(fields.size()));
      }
      std::vector<std::string> owned;
      owned.reserve(fields.size());
      for (auto f : fields) owned.emplace_back(text::trim(f));
      on_row(owned, line_no);
    }
    return;
  }
  while (text::next_data_line(in, line, line_no)) {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw row_error(ErrorCode::MalformedRow, line_no, e.what());
    }
    if (!obj.is_object()) throw row_error(ErrorCode::MalformedRow, line_no, "not a JSON object");
    std::vector<std::string> owned;
    for (const auto& key : json_keys) {
      auto it = obj.find(key);
      if (it == obj.end()) throw row_error(ErrorCode::MalformedRow, line_no, "missing key " + key);
      if (it->is_string()) {
        owned.push_back(it->get<std::string>());
      } else if (it->is_number_integer()) {
        owned.push_back(std::to_string(it->get<std::int64_t>()));
      } else if (it->is_number()) {
        owned.push_back(text::format_double(it->get<double>()));
      } else {
        throw row_error(ErrorCode::MalformedRow, line_no, "bad type for key " + key);
      }
    }
    on_row(owned, line_no);
  }
}

}  // namespace detail

inline constexpr std::string_view kEventsHeader = "student_id,question_id,timestamp_ms,event_kind,x,y";
inline constexpr std::string_view kSubmissionsHeader =
    "student_id,question_id,submitted_at_ms,attempt_index,raw_score";
inline constexpr std::string_view kQuestionsHeader = "question_id,math_dimension,grade,difficulty";

// Parses a mouse event log and groups it into trajectories keyed by
// (student, question, session). Trajectories come out ordered by
// (student, question, opened_at); events inside one are stably sorted by time.
inline std::vector<Trajectory> parse_events_log(std::istream& in, LogFormat format,
                                                const ParseOptions& options = {}) {
  using Key = std::pair<StudentId, QuestionId>;
  std::map<Key, std::vector<MouseEvent>> grouped;
  detail::for_each_row(
      in, format, kEventsHeader, {"student_id", "question_id", "timestamp_ms", "event_kind", "x", "y"},
      [&](const std::vector<std::string>& f, std::size_t line_no) {
        if (f[0].empty() || f[1].empty()) {
          throw detail::row_error(ErrorCode::MalformedRow, line_no, "empty identifier");
        }
        const auto ts = text::parse_int(f[2]);
        if (!ts) {
          throw detail::row_error(ErrorCode::NonMonotoneTimestamps, line_no,
                                  "unparseable timestamp '" + f[2] + "'");
        }
        const auto kind = parse_event_kind(f[3]);
        if (!kind) {
          throw detail::row_error(ErrorCode::UnknownEventKind, line_no, "event kind '" + f[3] + "'");
        }
        const auto x = text::parse_double(f[4]);
        const auto y = text::parse_double(f[5]);
        if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
          throw detail::row_error(ErrorCode::MalformedRow, line_no, "bad coordinate");
        }
        grouped[{StudentId{f[0]}, QuestionId{f[1]}}].push_back({*ts, *kind, *x, *y});
      });

  std::vector<Trajectory> out;
  for (auto& [key, events] : grouped) {
    std::stable_sort(events.begin(), events.end(),
                     [](const MouseEvent& a, const MouseEvent& b) { return a.timestamp < b.timestamp; });
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= events.size(); ++i) {
      if (i == events.size() || events[i].timestamp - events[i - 1].timestamp > options.session_gap_ms) {
        out.emplace_back(key.first, key.second,
                         std::vector<MouseEvent>(events.begin() + static_cast<std::ptrdiff_t>(begin),
                                                 events.begin() + static_cast<std::ptrdiff_t>(i)));
        begin = i;
      }
    }
  }
  return out;
}

inline std::vector<SubmissionRecord> parse_submissions(std::istream& in, LogFormat format,
                                                       const ScoreClassBins& bins = {}) {
  std::vector<SubmissionRecord> out;
  detail::for_each_row(
      in, format, kSubmissionsHeader,
      {"student_id", "question_id", "submitted_at_ms", "attempt_index", "raw_score"},
      [&](const std::vector<std::string>& f, std::size_t line_no) {
        const auto ts = text::parse_int(f[2]);
        const auto attempt = text::parse_int(f[3]);
        const auto score = text::parse_int(f[4]);
        if (f[0].empty() || f[1].empty() || !ts || !attempt || !score) {
          throw detail::row_error(ErrorCode::MalformedRow, line_no, "bad submission row");
        }
        if (*attempt != 1 && *attempt != 2) {
          throw detail::row_error(ErrorCode::MalformedRow, line_no, "attempt_index must be 1 or 2");
        }
        if (*score < 0 || *score > 100) {
          throw detail::row_error(ErrorCode::OutOfRangeScore, line_no, "raw_score outside [0,100]");
        }
        const int raw = static_cast<int>(*score);
        out.push_back({StudentId{f[0]}, QuestionId{f[1]}, *ts, static_cast<int>(*attempt), raw,
                       map_score_to_class(raw, bins)});
      });
  return out;
}

inline std::vector<QuestionMeta> parse_questions(std::istream& in, LogFormat format) {
  std::vector<QuestionMeta> out;
  detail::for_each_row(in, format, kQuestionsHeader, {"question_id", "math_dimension", "grade", "difficulty"},
                       [&](const std::vector<std::string>& f, std::size_t line_no) {
                         const auto grade = text::parse_int(f[2]);
                         const auto difficulty = text::parse_int(f[3]);
                         if (f[0].empty() || f[1].empty() || !grade || !difficulty) {
                           throw detail::row_error(ErrorCode::MalformedRow, line_no, "bad question row");
                         }
                         if (*difficulty < 1 || *difficulty > 5) {
                           throw detail::row_error(ErrorCode::MalformedRow, line_no,
                                                   "difficulty must be within [1,5]");
                         }
                         out.push_back({QuestionId{f[0]}, f[1], static_cast<int>(*grade),
                                        static_cast<int>(*difficulty)});
                       });
  return out;
}

inline void write_events(std::ostream& out, const std::vector<Trajectory>& trajectories,
                         LogFormat format = LogFormat::Csv) {
  if (format == LogFormat::Csv) out << kEventsHeader << '\n';
  for (const auto& t : trajectories) {
    for (const auto& e : t.events()) {
      if (format == LogFormat::Csv) {
        out << t.student().value << ',' << t.question().value << ',' << e.timestamp << ','
            << to_string(e.kind) << ',' << text::format_double(e.x) << ',' << text::format_double(e.y)
            << '\n';
      } else {
        nlohmann::json obj{{"student_id", t.student().value}, {"question_id", t.question().value},
                           {"timestamp_ms", e.timestamp}, {"event_kind", std::string(to_string(e.kind))},
                           {"x", e.x}, {"y", e.y}};
        out << obj.dump() << '\n';
      }
    }
  }
}

inline void write_submissions(std::ostream& out, const std::vector<SubmissionRecord>& records,
                              LogFormat format = LogFormat::Csv) {
  if (format == LogFormat::Csv) out << kSubmissionsHeader << '\n';
  for (const auto& r : records) {
    if (format == LogFormat::Csv) {
      out << r.student.value << ',' << r.question.value << ',' << r.submitted_at << ',' << r.attempt_index
          << ',' << r.raw_score << '\n';
    } else {
      nlohmann::json obj{{"student_id", r.student.value}, {"question_id", r.question.value},
                         {"submitted_at_ms", r.submitted_at}, {"attempt_index", r.attempt_index},
                         {"raw_score", r.raw_score}};
      out << obj.dump() << '\n';
    }
  }
}

inline void write_questions(std::ostream& out, const std::vector<QuestionMeta>& questions,
                            LogFormat format = LogFormat::Csv) {
  if (format == LogFormat::Csv) out << kQuestionsHeader << '\n';
  for (const auto& q : questions) {
    if (format == LogFormat::Csv) {
      out << q.question.value << ',' << q.math_dimension << ',' << q.grade << ',' << q.difficulty << '\n';
    } else {
      nlohmann::json obj{{"question_id", q.question.value}, {"math_dimension", q.math_dimension},
                         {"grade", q.grade}, {"difficulty", q.difficulty}};
      out << obj.dump() << '\n';
    }
  }
}

// For each submission, the index of the trajectory that produced it (if any).
// A trajectory belongs to the earliest submission with the same (student,
// question) submitted at or after its last event. When several trajectories
// map to one submission the latest one wins.
inline std::vector<std::optional<std::size_t>> associate_trajectories(
    const std::vector<Trajectory>& trajectories, const std::vector<SubmissionRecord>& records) {
  using Key = std::pair<StudentId, QuestionId>;
  std::map<Key, std::vector<std::size_t>> by_key;
  for (std::size_t i = 0; i < records.size(); ++i) by_key[{records[i].student, records[i].question}].push_back(i);
  for (auto& [key, idx] : by_key) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return records[a].submitted_at < records[b].submitted_at;
    });
  }

  std::vector<std::optional<std::size_t>> owner(records.size());
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    auto it = by_key.find({trajectories[t].student(), trajectories[t].question()});
    if (it == by_key.end()) continue;
    for (std::size_t r : it->second) {
      if (records[r].submitted_at >= trajectories[t].closed_at()) {
        auto& slot = owner[r];
        if (!slot || trajectories[*slot].closed_at() <= trajectories[t].closed_at()) slot = t;
        break;
      }
    }
  }
  return owner;
}

}  // namespace mousetrail
