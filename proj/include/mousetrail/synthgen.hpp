#pragma once

// Seeded synthetic corpus: question metadata, per-submission mouse
// trajectories and graded submissions with a planted behavioural signal.
//
// Every question carries a hidden skill; a student's effective ability on a
// question mixes a general ability with a per-skill affinity. Both the
// trajectory shape (think time, number and wobble of drags) and the expected
// score follow the effective ability, so a student's behaviour on one question
// says something about their score on other questions of the same skill.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mousetrail/error.hpp"
#include "mousetrail/rng.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail::synth {

struct StudentProfile {
  double ability = 0.5;
  double think_time_mean_ms = 8000.0;
  double drag_noise = 1.0;
  double activity_rate = 0.2;  // expected submissions per day
};

struct ScenarioConfig {
  int n_students = 500;
  int n_questions = 60;
  std::vector<std::string> dimensions{"area", "number", "shape"};
  int grade_min = 3;
  int grade_max = 4;
  int difficulty_min = 1;
  int difficulty_max = 5;
  int duration_days = 120;
  std::uint64_t seed = 42;
  double signal_strength = 0.8;
  int latent_skills = 4;
  int questions_per_student_min = 15;
  int questions_per_student_max = 25;
  double experiment_start_fraction = 0.6;
  double second_attempt_rate = 0.15;
  TimestampMs start_ms = 1'550'000'000'000;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "scenario: " + m); };
    if (n_students <= 0 || n_questions <= 0) fail("counts must be positive");
    if (dimensions.empty()) fail("need at least one dimension");
    if (grade_min > grade_max) fail("grade range");
    if (difficulty_min < 1 || difficulty_max > 5 || difficulty_min > difficulty_max) fail("difficulty range");
    if (duration_days <= 0) fail("duration_days must be positive");
    if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) fail("signal_strength must be within [0,1]");
    if (latent_skills <= 0) fail("latent_skills must be positive");
    if (questions_per_student_min <= 0 || questions_per_student_min > questions_per_student_max ||
        questions_per_student_max > n_questions) {
      fail("questions per student range");
    }
    if (!(experiment_start_fraction > 0.0 && experiment_start_fraction < 1.0)) fail("experiment_start_fraction");
    if (!(second_attempt_rate >= 0.0 && second_attempt_rate <= 1.0)) fail("second_attempt_rate");
  }

  TimestampMs experiment_start() const {
    return start_ms + static_cast<TimestampMs>(std::llround(experiment_start_fraction * duration_days * kMsPerDay));
  }
};

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = {{"n_students", c.n_students},
       {"n_questions", c.n_questions},
       {"dimensions", c.dimensions},
       {"grade_min", c.grade_min},
       {"grade_max", c.grade_max},
       {"difficulty_min", c.difficulty_min},
       {"difficulty_max", c.difficulty_max},
       {"duration_days", c.duration_days},
       {"seed", c.seed},
       {"signal_strength", c.signal_strength},
       {"latent_skills", c.latent_skills},
       {"questions_per_student_min", c.questions_per_student_min},
       {"questions_per_student_max", c.questions_per_student_max},
       {"experiment_start_fraction", c.experiment_start_fraction},
       {"second_attempt_rate", c.second_attempt_rate},
       {"start_ms", c.start_ms}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  const nlohmann::json defaults = ScenarioConfig{};
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::ConfigError, "scenario: unknown key '" + key + "'");
  }
  auto merged = defaults;
  merged.update(j);
  try {
    merged.at("n_students").get_to(c.n_students);
    merged.at("n_questions").get_to(c.n_questions);
    merged.at("dimensions").get_to(c.dimensions);
    merged.at("grade_min").get_to(c.grade_min);
    merged.at("grade_max").get_to(c.grade_max);
    merged.at("difficulty_min").get_to(c.difficulty_min);
    merged.at("difficulty_max").get_to(c.difficulty_max);
    merged.at("duration_days").get_to(c.duration_days);
    merged.at("seed").get_to(c.seed);
    merged.at("signal_strength").get_to(c.signal_strength);
    merged.at("latent_skills").get_to(c.latent_skills);
    merged.at("questions_per_student_min").get_to(c.questions_per_student_min);
    merged.at("questions_per_student_max").get_to(c.questions_per_student_max);
    merged.at("experiment_start_fraction").get_to(c.experiment_start_fraction);
    merged.at("second_attempt_rate").get_to(c.second_attempt_rate);
    merged.at("start_ms").get_to(c.start_ms);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("scenario: ") + e.what());
  }
}

struct GeneratedAttempt {
  Trajectory trajectory;
  int raw_score = 0;
  int planted_drags = 0;
};

namespace detail {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// How hard the question is for this student, in [0,1].
inline double challenge(const StudentProfile& p, const QuestionMeta& q) {
  return clamp01(0.5 + (q.difficulty - 3) / 5.0 - (p.ability - 0.5));
}

}  // namespace detail

inline GeneratedAttempt generate_trajectory(const StudentProfile& profile, const QuestionMeta& question,
                                            std::uint64_t seed, double signal_strength = 0.8,
                                            const StudentId& student = {"s"}, TimestampMs opened_at = 0) {
  auto rng = make_rng(seed, "trajectory");
  const double hard = detail::challenge(profile, question);
  std::vector<MouseEvent> ev;
  TimestampMs t = opened_at;
  double x = uniform(rng, 100, 700);
  double y = uniform(rng, 100, 500);
  auto push = [&](EventKind kind) { ev.push_back({t, kind, x, y}); };
  auto wander = [&](double step) {
    x = std::clamp(x + normal(rng, 0, step), 0.0, 800.0);
    y = std::clamp(y + normal(rng, 0, step), 0.0, 600.0);
  };

  // Think phase: sparse moves, sometimes a stray click.
  push(EventKind::Move);
  const double think_ms = profile.think_time_mean_ms * (0.6 + 0.8 * hard) * std::exp(normal(rng, 0, 0.2));
  const bool stray_click = uniform01(rng) < 0.25;
  bool clicked = false;
  while (static_cast<double>(t - opened_at) < think_ms) {
    t += uniform_int(rng, 120, 450);
    wander(12);
    push(EventKind::Move);
    if (stray_click && !clicked && static_cast<double>(t - opened_at) > think_ms / 2) {
      push(EventKind::Down);
      t += uniform_int(rng, 60, 140);
      push(EventKind::Up);
      clicked = true;
    }
  }

  const int drags = std::clamp(1 + static_cast<int>(std::floor(hard * 3.0 + uniform(rng, 0, 1.5))), 1, 5);
  for (int g = 0; g < drags; ++g) {
    if (g > 0) {
      const auto pauses = uniform_int(rng, 2, 4);
      for (std::int64_t k = 0; k < pauses; ++k) {
        t += static_cast<TimestampMs>(uniform(rng, 150, 500) * (0.5 + hard));
        wander(8);
        push(EventKind::Move);
      }
    }
    const double angle = uniform(rng, 0, 6.283185307179586);
    const double dist = uniform(rng, 80, 300);
    const double x0 = x, y0 = y;
    const double x1 = std::clamp(x0 + dist * std::cos(angle), 0.0, 800.0);
    const double y1 = std::clamp(y0 + dist * std::sin(angle), 0.0, 600.0);
    const double nx = -(y1 - y0), ny = x1 - x0;
    const double nlen = std::max(std::hypot(nx, ny), 1e-9);
    const double bow = profile.drag_noise * 25.0 * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
    push(EventKind::Down);
    const auto steps = uniform_int(rng, 8, 16);
    for (std::int64_t k = 1; k <= steps; ++k) {
      t += uniform_int(rng, 15, 35);
      const double f = static_cast<double>(k) / static_cast<double>(steps);
      const double off = k == steps ? 0.0 : bow * std::sin(3.141592653589793 * f) + normal(rng, 0, profile.drag_noise * 4);
      x = x0 + f * (x1 - x0) + off * nx / nlen;
      y = y0 + f * (y1 - y0) + off * ny / nlen;
      push(EventKind::Drag);
    }
    t += uniform_int(rng, 20, 60);
    push(EventKind::Up);
  }

  const auto trailing = uniform_int(rng, 3, 8);
  for (std::int64_t k = 0; k < trailing; ++k) {
    t += uniform_int(rng, 100, 400);
    wander(10);
    push(EventKind::Move);
  }

  // The score has its own stream so trajectory shape and score noise are independent.
  auto score_rng = make_rng(seed, "score");
  const double expected = 0.5 + 1.1 * (profile.ability - 0.5) - 0.09 * (question.difficulty - 3) -
                          0.12 * (profile.drag_noise - 1.0);
  const double noise = normal(score_rng, 0, 0.07);
  const double null_draw = uniform01(score_rng);
  const double frac = detail::clamp01(signal_strength * (expected + noise) + (1.0 - signal_strength) * null_draw);
  return {Trajectory(student, question.question, std::move(ev)), static_cast<int>(std::lround(100.0 * frac)), drags};
}

struct Corpus {
  ScenarioConfig config;
  std::vector<QuestionMeta> questions;
  std::vector<int> question_skill;  // hidden skill per question, same order
  std::vector<Trajectory> trajectories;  // ordered by (student, question, opened_at)
  std::vector<SubmissionRecord> submissions;  // ordered by (submitted_at, student, question)
  std::vector<int> planted_drags;  // per trajectory
  TimestampMs experiment_start = 0;
};

inline std::string padded_id(char prefix, int i, int width) {
  std::string digits = std::to_string(i);
  return std::string(1, prefix) + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') + digits;
}

inline Corpus generate_corpus(const ScenarioConfig& config, const ScoreClassBins& bins = {}) {
  config.validate();
  Corpus c;
  c.config = config;
  c.experiment_start = config.experiment_start();

  auto qrng = make_rng(config.seed, "questions");
  for (int i = 0; i < config.n_questions; ++i) {
    QuestionMeta q;
    q.question = {padded_id('q', i + 1, 3)};
    q.math_dimension = config.dimensions[static_cast<std::size_t>(uniform_int(qrng, 0, static_cast<std::int64_t>(config.dimensions.size()) - 1))];
    q.grade = static_cast<int>(uniform_int(qrng, config.grade_min, config.grade_max));
    q.difficulty = static_cast<int>(uniform_int(qrng, config.difficulty_min, config.difficulty_max));
    c.questions.push_back(q);
    c.question_skill.push_back(static_cast<int>(uniform_int(qrng, 0, config.latent_skills - 1)));
  }

  struct Pending {
    Trajectory trajectory;
    int drags;
  };
  std::vector<Pending> pending;
  const double duration_ms = static_cast<double>(config.duration_days) * kMsPerDay;
  for (int s = 0; s < config.n_students; ++s) {
    const StudentId sid{padded_id('s', s + 1, 4)};
    auto rng = make_rng(config.seed, "student", static_cast<std::uint64_t>(s));
    const double general = uniform01(rng);
    std::vector<double> affinity(static_cast<std::size_t>(config.latent_skills));
    for (auto& a : affinity) a = uniform01(rng);
    const double think_base = uniform(rng, 5000, 15000);
    const double noise_base = uniform(rng, 0.6, 1.4);
    const auto n_q = static_cast<int>(uniform_int(rng, config.questions_per_student_min, config.questions_per_student_max));

    std::vector<int> order(static_cast<std::size_t>(config.n_questions));
    for (int i = 0; i < config.n_questions; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < n_q; ++i) {
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(uniform_int(rng, i, config.n_questions - 1))]);
    }
    std::vector<double> times(static_cast<std::size_t>(n_q));
    for (auto& tm : times) tm = uniform(rng, 0, duration_ms);
    std::sort(times.begin(), times.end());

    for (int k = 0; k < n_q; ++k) {
      const auto& q = c.questions[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      const int skill = c.question_skill[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      StudentProfile p;
      p.ability = detail::clamp01(0.3 * general + 0.7 * affinity[static_cast<std::size_t>(skill)]);
      p.think_time_mean_ms = think_base * (1.5 - p.ability);
      p.drag_noise = noise_base * (1.5 - p.ability);
      p.activity_rate = n_q / static_cast<double>(config.duration_days);

      const auto opened = config.start_ms + static_cast<TimestampMs>(times[static_cast<std::size_t>(k)]);
      const auto attempt_seed = derive_seed(config.seed, "attempt", static_cast<std::uint64_t>(s) * 100000u + static_cast<std::uint64_t>(k));
      auto first = generate_trajectory(p, q, attempt_seed, config.signal_strength, sid, opened);
      const TimestampMs submitted = first.trajectory.closed_at() + uniform_int(rng, 500, 3000);
      c.submissions.push_back({sid, q.question, submitted, 1, first.raw_score, map_score_to_class(first.raw_score, bins)});
      const int first_class = c.submissions.back().score_class;
      const int first_score = first.raw_score;
      pending.push_back({std::move(first.trajectory), first.planted_drags});

      if (first_class < kNumClasses - 1 && uniform01(rng) < config.second_attempt_rate) {
        StudentProfile retry = p;
        retry.ability = detail::clamp01(p.ability + 0.1);
        const auto reopened = submitted + uniform_int(rng, 3'600'000, 86'400'000);
        auto second = generate_trajectory(retry, q, derive_seed(attempt_seed, "retry"), config.signal_strength, sid, reopened);
        const int score = std::min(100, first_score + static_cast<int>(uniform_int(rng, 0, 25)));
        const TimestampMs resubmitted = second.trajectory.closed_at() + uniform_int(rng, 500, 3000);
        c.submissions.push_back({sid, q.question, resubmitted, 2, score, map_score_to_class(score, bins)});
        pending.push_back({std::move(second.trajectory), second.planted_drags});
      }
    }
  }

  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return std::tuple(a.trajectory.student(), a.trajectory.question(), a.trajectory.opened_at()) <
           std::tuple(b.trajectory.student(), b.trajectory.question(), b.trajectory.opened_at());
  });
  for (auto& p : pending) {
    c.trajectories.push_back(std::move(p.trajectory));
    c.planted_drags.push_back(p.drags);
  }
  std::sort(c.submissions.begin(), c.submissions.end(), [](const SubmissionRecord& a, const SubmissionRecord& b) {
    return std::tie(a.submitted_at, a.student, a.question) < std::tie(b.submitted_at, b.student, b.question);
  });
  return c;
}

// Writes trajectories.csv, submissions.csv, questions.csv, scenario.json and a
// pipeline.conf pointing at them with the matching experiment start.
inline void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("trajectories.csv");
    write_events(out, c.trajectories);
  }
  {
    auto out = open("submissions.csv");
    write_submissions(out, c.submissions);
  }
  {
    auto out = open("questions.csv");
    write_questions(out, c.questions);
  }
  {
    auto out = open("scenario.json");
    out << nlohmann::json(c.config).dump(2) << '\n';
  }
  auto out = open("pipeline.conf");
  out << "# generated by mousetrail synth\n"
      << "trajectories = trajectories.csv\n"
      << "submissions = submissions.csv\n"
      << "questions = questions.csv\n"
      << "experiment_start_date = " << c.experiment_start << '\n'
      << "seed = " << c.config.seed << '\n';
}

}  // namespace mousetrail::synth
