// Build the question similarity network from a small synthetic corpus and
// list each question's most similar neighbour.

#include <iostream>

#include "mousetrail/pipeline.hpp"
#include "mousetrail/synthgen.hpp"

namespace mt = mousetrail;

int main() {
  mt::synth::ScenarioConfig sc;
  sc.n_students = 120;
  sc.n_questions = 12;
  sc.questions_per_student_min = 6;
  sc.questions_per_student_max = 10;
  const auto corpus = mt::synth::generate_corpus(sc);

  const mt::DensityParams params;
  const auto rows = mt::compute_mouse_rows(corpus.trajectories, corpus.submissions, params);
  const auto matrix = mt::compute_similarity(rows, corpus.experiment_start);

  const auto& qs = matrix.questions();
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < qs.size(); ++j) {
      if (j == i || matrix.at(i, j) == mt::kNoPath) continue;
      if (!best || matrix.at(i, j) > matrix.at(i, *best)) best = j;
    }
    std::cout << qs[i].value;
    if (best) std::cout << " ~ " << qs[*best].value << "  " << matrix.at(i, *best);
    else std::cout << "  (no shared solvers)";
    std::cout << '\n';
  }
}
