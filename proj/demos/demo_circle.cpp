// Two-link arm following a circle in joint space, started off the path.
// Prints a short convergence summary for the pumps-off and pumps-on
// controllers and the computed-torque baseline.
#include <cstdio>
#include <memory>

#include "pbtrack/pbtrack.hpp"

using namespace pbtrack;

int main() {
  auto arm = std::make_shared<TwoLinkArm>(TwoLinkParams{.g = 0.0});
  Vector center(2);
  center << 0.5, 1.0;
  auto path = std::make_shared<CirclePath>(center, 0.5, 2.0);
  auto rm = std::make_shared<ReducedModel>(arm, path);

  Scenario sc;
  sc.rm = rm;
  sc.initial = standard_perturbation(*rm);

  std::printf("%-16s %12s %12s %12s %12s\n", "controller", "phi_final", "|sdot-1|", "E_final", "t0_estimate");
  for (auto mode : {ControllerMode::theorem1, ControllerMode::theorem1_pump, ControllerMode::computed_torque}) {
    sc.controller = mode;
    const Trace trace = integrate(sc);
    if (trace.fault) {
      std::printf("%-16s fault at t = %g: %s\n", to_string(mode), trace.fault->t, trace.fault->what.c_str());
      continue;
    }
    const auto c = convergence_metrics(trace, *rm);
    std::printf("%-16s %12.3e %12.3e %12.3e %12.4f\n", to_string(mode), c.phi_final, c.sdot_error_final, c.E_final,
                c.t0_estimate);
  }
  return 0;
}
