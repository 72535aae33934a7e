// mousetrail command-line driver.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mousetrail/config.hpp"
#include "mousetrail/log.hpp"
#include "mousetrail/pipeline.hpp"
#include "mousetrail/synthgen.hpp"

namespace mt = mousetrail;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

// Flag values given on the command line, keyed like the config file.
struct FlagSet {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool grid_search = false;
  int verbose = 0;
  bool quiet = false;
};

void add_pipeline_flags(CLI::App* cmd, FlagSet& f) {
  cmd->add_option("-c,--config", f.config_file, "key=value config file");
  auto opt = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option(flag, f.values[key], help);
  };
  opt("--trajectories", "trajectories", "mouse event log (.csv or .jsonl)");
  opt("--submissions", "submissions", "submission log (.csv or .jsonl)");
  opt("--questions", "questions", "question metadata (.csv or .jsonl)");
  opt("-o,--out-dir", "out_dir", "output directory");
  opt("--window-size", "window_size", "change-point window size in events");
  opt("--density-threshold", "density_threshold", "auto or a value in [0,1]");
  opt("--score-bins", "score_bins", "three class edges, e.g. 25;50;75");
  opt("--recent-window-days", "recent_window_days", "window for recent statistics");
  opt("--experiment-start-date", "experiment_start_date", "YYYY-MM-DD or epoch milliseconds");
  opt("--sim-threshold", "sim_threshold", "minimum similarity for the similar question");
  opt("--variant", "variant", "baseline, proposed or both");
  opt("--model", "model", "lr, rf, gbdt, or a ';' separated list");
  opt("--n-runs", "n_runs", "number of repeated runs");
  opt("--seed", "seed", "top-level seed");
  opt("--test-fraction", "test_fraction", "held-out share of examples");
  opt("--smote-k", "smote_k", "SMOTE neighbours");
  opt("--jobs", "jobs", "worker threads");
  opt("--session-gap-minutes", "session_gap_minutes", "idle gap that splits trajectories");
  cmd->add_flag("--grid-search", f.grid_search, "tune hyperparameters on a validation split");
}

mt::PipelineConfig resolve_config(const FlagSet& f) {
  mt::PipelineConfig cfg;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw mt::Error(mt::ErrorCode::ConfigError, "config file not found: " + f.config_file);
    auto file_values = mt::read_config_map(in);
    mt::resolve_paths(file_values, std::filesystem::path(f.config_file).parent_path());
    mt::apply_config(cfg, file_values);
  }
  mt::ConfigMap flags;
  for (const auto& [key, value] : f.values) {
    if (!value.empty()) flags[key] = value;
  }
  if (f.grid_search) flags["grid_search"] = "true";
  mt::apply_config(cfg, flags);
  return cfg;
}

void set_verbosity(const FlagSet& f) {
  if (f.quiet) mt::log::set_level(mt::log::Level::Error);
  else if (f.verbose >= 2) mt::log::set_level(mt::log::Level::Debug);
  else if (f.verbose == 1) mt::log::set_level(mt::log::Level::Info);
}

int run_synth(const std::string& scenario_file, const std::string& out_dir, const std::string& seed) {
  mt::synth::ScenarioConfig sc;
  if (!scenario_file.empty()) {
    std::ifstream in(scenario_file);
    if (!in) throw mt::Error(mt::ErrorCode::ConfigError, "scenario file not found: " + scenario_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw mt::Error(mt::ErrorCode::ConfigError, std::string("scenario: ") + e.what());
    }
    sc = j.get<mt::synth::ScenarioConfig>();
  }
  if (!seed.empty()) {
    const auto s = mt::text::parse_int(seed);
    if (!s || *s < 0) throw mt::Error(mt::ErrorCode::ConfigError, "invalid seed: " + seed);
    sc.seed = static_cast<std::uint64_t>(*s);
  }
  const auto corpus = mt::synth::generate_corpus(sc);
  mt::synth::write_corpus(corpus, out_dir);
  mt::log::info("wrote " + std::to_string(corpus.trajectories.size()) + " trajectories and " +
                std::to_string(corpus.submissions.size()) + " submissions to " + out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mousetrail: mouse-trajectory features and score-class prediction"};
  app.require_subcommand(1);
  app.fallthrough();
  FlagSet flags;
  app.add_flag("-v,--verbose", flags.verbose, "more log output (repeat for debug)");
  app.add_flag("-q,--quiet", flags.quiet, "errors only");

  struct Step {
    const char* name;
    const char* help;
  };
  const Step steps[] = {
      {"ingest", "parse and validate the three input logs"},
      {"features", "extract mouse features per submission"},
      {"simmatrix", "build the question similarity matrix"},
      {"build-dataset", "assemble baseline and proposed datasets"},
      {"train", "train one model per variant, model kind and run"},
      {"evaluate", "evaluate trained models and write the report"},
      {"run", "all of the above in order"},
  };
  std::map<std::string, CLI::App*> commands;
  for (const auto& s : steps) {
    commands[s.name] = app.add_subcommand(s.name, s.help);
    add_pipeline_flags(commands[s.name], flags);
  }

  std::string scenario, synth_out, synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--scenario", scenario, "JSON scenario file");
  synth->add_option("-o,--out-dir", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  set_verbosity(flags);

  try {
    if (synth->parsed()) return run_synth(scenario, synth_out, synth_seed);
    const auto cfg = resolve_config(flags);
    mt::log::info("config hash " + cfg.hash());
    if (commands["ingest"]->parsed()) mt::step_ingest(cfg);
    else if (commands["features"]->parsed()) mt::step_features(cfg);
    else if (commands["simmatrix"]->parsed()) mt::step_simmatrix(cfg);
    else if (commands["build-dataset"]->parsed()) mt::step_build_dataset(cfg);
    else if (commands["train"]->parsed()) mt::step_train(cfg);
    else if (commands["evaluate"]->parsed()) mt::step_evaluate(cfg);
    else if (commands["run"]->parsed()) mt::run_pipeline(cfg);
    return 0;
  } catch (const mt::Error& e) {
    mt::log::error(e.what());
    return e.code() == mt::ErrorCode::ConfigError ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    mt::log::error(std::string("internal error: ") + e.what());
    return kExitInternal;
  }
}
