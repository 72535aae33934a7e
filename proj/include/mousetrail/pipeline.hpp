#pragma once

// End-to-end stages, both in memory and as file-producing steps. Each file
// step reads what the previous one wrote, so running the steps one by one
// gives the same artifacts as `run_pipeline`.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mousetrail/config.hpp"
#include "mousetrail/dataset.hpp"
#include "mousetrail/interaction_features.hpp"
#include "mousetrail/log.hpp"
#include "mousetrail/models.hpp"
#include "mousetrail/report.hpp"
#include "mousetrail/similarity.hpp"
#include "mousetrail/statistical_features.hpp"
#include "mousetrail/trajectory.hpp"

namespace mousetrail {

namespace fs = std::filesystem;

// Runs `body`, attaching the stage name to any library error.
template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

// ---- In-memory stages ------------------------------------------------------------

struct RawInputs {
  std::vector<Trajectory> trajectories;
  std::vector<SubmissionRecord> records;
  std::vector<QuestionMeta> questions;
};

// Mouse features of every submission whose trajectory was found.
inline std::vector<MouseFeatureRow> compute_mouse_rows(const std::vector<Trajectory>& trajectories,
                                                       const std::vector<SubmissionRecord>& records,
                                                       const DensityParams& density) {
  density.validate();
  const auto owner = associate_trajectories(trajectories, records);
  std::vector<MouseFeatureRow> rows;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!owner[i]) {
      ++missing;
      continue;
    }
    const auto& r = records[i];
    rows.push_back({r.student, r.question, r.submitted_at, r.attempt_index, r.raw_score, r.score_class,
                    extract_mouse_features(trajectories[*owner[i]], density)});
  }
  if (missing > 0) log::info(std::to_string(missing) + " submissions have no trajectory");
  return rows;
}

// First submissions before `cutoff`, each as mouse features plus raw score.
inline std::vector<SubmissionFeatureVector> network_submissions(const std::vector<MouseFeatureRow>& rows,
                                                                TimestampMs cutoff) {
  std::vector<SubmissionFeatureVector> out;
  for (const auto& r : rows) {
    if (r.attempt_index != 1 || r.submitted_at >= cutoff) continue;
    SubmissionFeatureVector v{r.student, r.question, r.features};
    v.values.push_back(r.raw_score);
    out.push_back(std::move(v));
  }
  return out;
}

// Rounds every entry to the precision of the matrix file so that in-memory
// and file-based runs agree exactly.
inline SimilarityMatrix quantize(const SimilarityMatrix& m) {
  std::vector<double> values;
  values.reserve(m.size() * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) values.push_back(*text::parse_double(text::format_fixed(m.at(i, j), 9)));
  }
  return SimilarityMatrix(m.questions(), std::move(values), m.dropped_dimensions());
}

inline SimilarityMatrix compute_similarity(const std::vector<MouseFeatureRow>& rows, TimestampMs cutoff) {
  const ProblemSolvingNetwork net(network_submissions(rows, cutoff));
  return quantize(build_similarity_matrix(net));
}

struct DatasetSettings {
  TimestampMs experiment_start = 0;
  int recent_window_days = 14;
  double sim_threshold = 0.8;
};

inline std::pair<Dataset, Dataset> build_datasets(const std::vector<SubmissionRecord>& records,
                                                  const std::vector<QuestionMeta>& questions,
                                                  const std::vector<MouseFeatureRow>& rows,
                                                  const SimilarityMatrix& matrix, const DatasetSettings& settings) {
  const auto catalog = make_catalog(questions);
  const auto schema = FeatureSchema::from_questions(questions);
  const AssemblyInputs in{records,  catalog, schema, settings.experiment_start, settings.recent_window_days,
                          matrix,   rows,    settings.sim_threshold};
  return assemble_datasets(in);
}

struct PipelineResult {
  std::pair<Dataset, Dataset> datasets;
  std::vector<RunReport> reports;  // per model: baseline then proposed
  std::vector<VariantComparison> comparisons;
};

inline RunSettings run_settings(const PipelineConfig& cfg) {
  RunSettings s;
  s.n_runs = cfg.n_runs;
  s.base_seed = cfg.seed;
  s.test_fraction = cfg.test_fraction;
  s.smote_k = cfg.smote_k;
  s.jobs = cfg.jobs;
  s.grid_search = cfg.grid_search;
  return s;
}

inline DatasetSettings dataset_settings(const PipelineConfig& cfg) {
  return {cfg.require_experiment_start(), cfg.recent_window_days, cfg.sim_threshold};
}

// Everything after ingestion, without touching the file system. Both variants
// are always built; `cfg.variants` selects which get evaluated.
inline PipelineResult run_in_memory(const RawInputs& inputs, const PipelineConfig& cfg) {
  PipelineResult out;
  const auto rows = stage("features", [&] { return compute_mouse_rows(inputs.trajectories, inputs.records, cfg.density); });
  const auto cutoff = cfg.require_experiment_start();
  const auto matrix = stage("simmatrix", [&] { return compute_similarity(rows, cutoff); });
  out.datasets = stage("build-dataset", [&] {
    return build_datasets(inputs.records, inputs.questions, rows, matrix, dataset_settings(cfg));
  });
  const auto settings = run_settings(cfg);
  for (auto kind : cfg.models) {
    const RunReport* base = nullptr;
    const RunReport* prop = nullptr;
    std::vector<RunReport> reps;
    for (auto v : cfg.variants) {
      const auto& ds = v == Variant::Baseline ? out.datasets.first : out.datasets.second;
      reps.push_back(stage("evaluate", [&] { return repeated_runs(ds, kind, settings); }));
    }
    for (auto& r : reps) out.reports.push_back(std::move(r));
    for (auto it = out.reports.end() - static_cast<std::ptrdiff_t>(cfg.variants.size()); it != out.reports.end(); ++it) {
      (it->variant == Variant::Baseline ? base : prop) = &*it;
    }
    if (base && prop) out.comparisons.push_back(compare_variants(*base, *prop));
  }
  return out;
}

// ---- Files -------------------------------------------------------------------------

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

// Fails before any work if a configured input is missing.
inline void check_inputs(const PipelineConfig& cfg) {
  const std::pair<const char*, const std::string*> inputs[] = {
      {"trajectories", &cfg.trajectories}, {"submissions", &cfg.submissions}, {"questions", &cfg.questions}};
  for (const auto& [key, path] : inputs) {
    if (path->empty()) throw Error(ErrorCode::ConfigError, std::string(key) + " path is not set");
    if (!fs::is_regular_file(*path)) throw Error(ErrorCode::ConfigError, std::string(key) + " file not found: " + *path);
  }
}

inline RawInputs load_inputs(const PipelineConfig& cfg) {
  check_inputs(cfg);
  return stage("ingest", [&] {
    RawInputs in;
    {
      auto f = open_input(cfg.trajectories);
      in.trajectories = parse_events_log(f, format_for(cfg.trajectories), cfg.parse_options());
    }
    {
      auto f = open_input(cfg.submissions);
      in.records = parse_submissions(f, format_for(cfg.submissions), cfg.bins);
    }
    {
      auto f = open_input(cfg.questions);
      in.questions = parse_questions(f, format_for(cfg.questions));
    }
    return in;
  });
}

inline constexpr std::string_view kMouseFeaturesFile = "mouse_features.csv";
inline constexpr std::string_view kSimilarityFile = "similarity.csv";
inline constexpr std::string_view kReportFile = "report.json";

inline fs::path dataset_path(const PipelineConfig& cfg, Variant v) {
  return fs::path(cfg.out_dir) / ("dataset_" + std::string(to_string(v)) + ".csv");
}

inline fs::path model_path(const PipelineConfig& cfg, Variant v, ModelKind k, int run) {
  return fs::path(cfg.out_dir) / "models" /
         (std::string(to_string(v)) + "_" + std::string(to_string(k)) + "_run" + std::to_string(run) + ".json");
}

inline void write_mouse_rows(std::ostream& out, const std::vector<MouseFeatureRow>& rows, const std::string& config_hash) {
  out << "# mousetrail mouse features config_hash=" << config_hash << '\n';
  out << "student_id,question_id,submitted_at_ms,attempt_index,raw_score,score_class";
  for (const auto& n : mouse_feature_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << r.student.value << ',' << r.question.value << ',' << r.submitted_at << ',' << r.attempt_index << ','
        << r.raw_score << ',' << r.score_class;
    for (double v : r.features) out << ',' << text::format_double(v);
    out << '\n';
  }
}

inline std::vector<MouseFeatureRow> read_mouse_rows(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!text::next_data_line(in, line, line_no)) throw Error(ErrorCode::MalformedRow, "empty mouse feature file");
  const std::size_t width = 6 + kMouseFeatureCount;
  if (text::split(line).size() != width) throw Error(ErrorCode::MalformedRow, "bad mouse feature header");
  std::vector<MouseFeatureRow> rows;
  while (text::next_data_line(in, line, line_no)) {
    const auto f = text::split(line);
    auto bad = [&] { return Error(ErrorCode::MalformedRow, "mouse feature line " + std::to_string(line_no)); };
    if (f.size() != width) throw bad();
    MouseFeatureRow r;
    r.student.value = std::string(f[0]);
    r.question.value = std::string(f[1]);
    const auto ts = text::parse_int(f[2]), attempt = text::parse_int(f[3]), score = text::parse_int(f[4]),
               cls = text::parse_int(f[5]);
    if (!ts || !attempt || !score || !cls) throw bad();
    r.submitted_at = *ts;
    r.attempt_index = static_cast<int>(*attempt);
    r.raw_score = static_cast<int>(*score);
    r.score_class = static_cast<int>(*cls);
    for (std::size_t i = 6; i < f.size(); ++i) {
      const auto v = text::parse_double(f[i]);
      if (!v) throw bad();
      r.features.push_back(*v);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

template <typename T>
T read_file(const fs::path& path, T (*reader)(std::istream&)) {
  auto in = open_input(path.string());
  return reader(in);
}

inline nlohmann::json step_ingest(const PipelineConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto owner = associate_trajectories(in.trajectories, in.records);
  const auto matched = static_cast<std::size_t>(std::count_if(owner.begin(), owner.end(), [](const auto& o) { return o.has_value(); }));
  nlohmann::json summary{{"config_hash", cfg.hash()},
                         {"trajectories", in.trajectories.size()},
                         {"submissions", in.records.size()},
                         {"questions", in.questions.size()},
                         {"submissions_with_trajectory", matched}};
  auto out = open_output(fs::path(cfg.out_dir) / "ingest.json");
  out << summary.dump(2) << '\n';
  return summary;
}

inline void step_features(const PipelineConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto rows = stage("features", [&] { return compute_mouse_rows(in.trajectories, in.records, cfg.density); });
  auto out = open_output(fs::path(cfg.out_dir) / kMouseFeaturesFile);
  write_mouse_rows(out, rows, cfg.hash());
}

inline void step_simmatrix(const PipelineConfig& cfg) {
  const auto cutoff = cfg.require_experiment_start();
  const auto rows = stage("simmatrix", [&] { return read_file(fs::path(cfg.out_dir) / kMouseFeaturesFile, read_mouse_rows); });
  const auto matrix = stage("simmatrix", [&] { return compute_similarity(rows, cutoff); });
  auto out = open_output(fs::path(cfg.out_dir) / kSimilarityFile);
  write_similarity_matrix(out, matrix, cfg.hash());
}

inline nlohmann::json step_build_dataset(const PipelineConfig& cfg) {
  const auto settings = dataset_settings(cfg);
  check_inputs(cfg);
  auto [baseline, proposed] = stage("build-dataset", [&] {
    auto sf = open_input(cfg.submissions);
    const auto records = parse_submissions(sf, format_for(cfg.submissions), cfg.bins);
    auto qf = open_input(cfg.questions);
    const auto questions = parse_questions(qf, format_for(cfg.questions));
    const auto rows = read_file(fs::path(cfg.out_dir) / kMouseFeaturesFile, read_mouse_rows);
    const auto matrix = read_file(fs::path(cfg.out_dir) / kSimilarityFile, read_similarity_matrix);
    return build_datasets(records, questions, rows, matrix, settings);
  });
  for (const auto* ds : {&baseline, &proposed}) {
    auto out = open_output(dataset_path(cfg, ds->variant));
    write_dataset(out, *ds, cfg.hash());
  }
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& e : baseline.examples) ++counts[static_cast<std::size_t>(e.label)];
  nlohmann::json manifest{{"config_hash", cfg.hash()},
                          {"seed", cfg.seed},
                          {"variants", {"baseline", "proposed"}},
                          {"experiment_start_ms", settings.experiment_start},
                          {"recent_window_days", settings.recent_window_days},
                          {"sim_threshold", settings.sim_threshold},
                          {"examples", baseline.examples.size()},
                          {"class_counts", counts},
                          {"baseline_features", baseline.feature_names.size()},
                          {"proposed_features", proposed.feature_names.size()}};
  auto out = open_output(fs::path(cfg.out_dir) / "dataset_manifest.json");
  out << manifest.dump(2) << '\n';
  return manifest;
}

inline Dataset load_dataset(const PipelineConfig& cfg, Variant v) {
  return stage("train", [&] { return read_file(dataset_path(cfg, v), read_dataset); });
}

inline void step_train(const PipelineConfig& cfg) {
  const auto settings = run_settings(cfg);
  for (auto v : cfg.variants) {
    const auto ds = load_dataset(cfg, v);
    for (auto kind : cfg.models) {
      for (int i = 0; i < cfg.n_runs; ++i) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
        auto j = stage("train", [&] {
          const auto split = split_train_test(ds.examples, settings.test_fraction, seed);
          const auto train_set = balanced_training_set(split, settings.smote_k);
          const auto model = train(run_spec(kind, train_set, settings, seed), train_set, settings.jobs);
          auto json = model_to_json(model);
          json["config_hash"] = cfg.hash();
          json["run"] = i;
          json["train_size"] = train_set.size();
          return json;
        });
        auto out = open_output(model_path(cfg, v, kind, i));
        out << j.dump() << '\n';
      }
    }
  }
}

inline nlohmann::json assemble_report(const PipelineConfig& cfg, const std::vector<RunReport>& reports,
                                      const std::vector<VariantComparison>& comparisons,
                                      const std::map<Variant, std::vector<std::string>>& names) {
  nlohmann::json j{{"format", "mousetrail-report"},
                   {"version", 1},
                   {"config_hash", cfg.hash()},
                   {"seed", cfg.seed},
                   {"n_runs", cfg.n_runs},
                   {"roc_average", "macro one-vs-rest"}};
  auto results = nlohmann::json::array();
  for (const auto& r : reports) results.push_back(report_json(r, names.at(r.variant)));
  j["results"] = results;
  auto comps = nlohmann::json::array();
  for (const auto& c : comparisons) comps.push_back(comparison_json(c));
  j["comparisons"] = comps;
  return j;
}

inline void write_report_artifacts(const PipelineConfig& cfg, const std::vector<RunReport>& reports,
                                   const nlohmann::json& report) {
  const fs::path dir(cfg.out_dir);
  {
    auto out = open_output(dir / kReportFile);
    out << report.dump(2) << '\n';
  }
  std::map<ModelKind, std::vector<const RunReport*>> by_model;
  for (const auto& r : reports) {
    const std::string stem = std::string(to_string(r.variant)) + "_" + std::string(to_string(r.kind));
    {
      auto out = open_output(dir / ("roc_" + stem + ".csv"));
      write_roc_csv(out, r, cfg.hash());
    }
    {
      auto out = open_output(dir / ("heatmap_" + stem + ".csv"));
      write_heatmap_csv(out, r.confusion, cfg.hash());
    }
    {
      auto out = open_output(dir / ("heatmap_" + stem + ".svg"));
      write_heatmap_svg(out, r.confusion, stem + " (row-normalized)");
    }
    by_model[r.kind].push_back(&r);
  }
  for (const auto& [kind, reps] : by_model) {
    auto out = open_output(dir / ("roc_" + std::string(to_string(kind)) + ".svg"));
    write_roc_svg(out, reps, std::string(to_string(kind)) + " macro ROC, mean +/- std");
  }
}

inline nlohmann::json step_evaluate(const PipelineConfig& cfg) {
  std::vector<RunReport> reports;
  std::vector<VariantComparison> comparisons;
  std::map<Variant, std::vector<std::string>> names;
  for (auto kind : cfg.models) {
    std::map<Variant, std::size_t> at;
    for (auto v : cfg.variants) {
      const auto ds = load_dataset(cfg, v);
      names[v] = ds.feature_names;
      std::vector<RunResult> runs;
      for (int i = 0; i < cfg.n_runs; ++i) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
        runs.push_back(stage("evaluate", [&] {
          auto in = open_input(model_path(cfg, v, kind, i).string());
          nlohmann::json j;
          try {
            in >> j;
          } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ModelFormat, e.what());
          }
          const auto model = model_from_json(j);
          const auto split = split_train_test(ds.examples, cfg.test_fraction, seed);
          return evaluate_run(model, split, j.value("train_size", std::size_t{0}));
        }));
      }
      at[v] = reports.size();
      reports.push_back(aggregate_runs(v, kind, std::move(runs)));
    }
    if (at.size() == 2) comparisons.push_back(compare_variants(reports[at[Variant::Baseline]], reports[at[Variant::Proposed]]));
  }
  auto report = assemble_report(cfg, reports, comparisons, names);
  write_report_artifacts(cfg, reports, report);
  return report;
}

// ingest -> features -> similarity -> datasets -> train -> evaluate.
inline nlohmann::json run_pipeline(const PipelineConfig& cfg) {
  check_inputs(cfg);
  cfg.require_experiment_start();
  step_ingest(cfg);
  step_features(cfg);
  step_simmatrix(cfg);
  step_build_dataset(cfg);
  step_train(cfg);
  return step_evaluate(cfg);
}

}  // namespace mousetrail
