// Train GBDT on the baseline and proposed datasets of a synthetic corpus and
// compare them.

#include <iostream>

#include "mousetrail/pipeline.hpp"
#include "mousetrail/synthgen.hpp"

namespace mt = mousetrail;

int main() {
  mt::synth::ScenarioConfig sc;
  sc.n_students = 200;
  const auto corpus = mt::synth::generate_corpus(sc);

  mt::PipelineConfig cfg;
  cfg.experiment_start = corpus.experiment_start;
  cfg.n_runs = 2;
  const mt::RawInputs inputs{corpus.trajectories, corpus.submissions, corpus.questions};
  const auto result = mt::run_in_memory(inputs, cfg);

  for (const auto& r : result.reports) {
    std::cout << mt::to_string(r.variant) << ' ' << mt::to_string(r.kind) << "  accuracy " << r.accuracy.mean
              << "  weighted F1 " << r.weighted_f1.mean << "  macro AUC " << r.macro_auc.mean << '\n';
  }
  for (const auto& c : result.comparisons) {
    std::cout << "gain " << c.accuracy_gain << "  ABROCA " << c.abroca.signed_area << '\n';
  }
}
