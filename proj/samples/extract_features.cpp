// Generate one synthetic attempt, locate its change points and print the
// 37 mouse features.

#include <iomanip>
#include <iostream>

#include "mousetrail/changepoint.hpp"
#include "mousetrail/interaction_features.hpp"
#include "mousetrail/synthgen.hpp"

namespace mt = mousetrail;

int main() {
  const mt::QuestionMeta question{{"q001"}, "area", 3, 3};
  const mt::synth::StudentProfile profile{};
  const auto attempt = mt::synth::generate_trajectory(profile, question, 7);
  const auto& traj = attempt.trajectory;

  const mt::DensityParams params;  // W = 10, auto threshold
  const auto cps = mt::detect_change_points(traj, params);
  std::cout << traj.size() << " events, threshold " << mt::resolve_threshold(traj, params) << '\n';
  if (cps.cp1) std::cout << "cp1 " << *cps.cp1 << "  cp2 " << *cps.cp2 << '\n';
  else std::cout << "no change points\n";

  const auto values = mt::extract_mouse_features(traj, params);
  const auto& names = mt::mouse_feature_names();
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::cout << std::left << std::setw(34) << names[i] << values[i] << '\n';
  }
}
