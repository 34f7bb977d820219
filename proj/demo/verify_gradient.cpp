// Eigenvalue condition, constant c and settling-time bound for the
// piecewise-scaled quadratic gradient flow, against measured settling times.
#include <cstdio>

#include "fxts/catalog.hpp"
#include "fxts/lyapunov.hpp"
#include "fxts/scaling.hpp"
#include "fxts/settling.hpp"
#include "fxts/sim.hpp"

int main() {
  using namespace fxts;
  const auto entry = catalog_get("quadratic_gradient:q=1,4");
  SamplingPlan plan;
  plan.domain = Annulus{1e-2, 10.0};
  plan.seed = 3;

  const auto ci = verify_condition_i(entry.field, plan, HConvention::theorem5);
  std::printf("condition (i): lambda0 ~ %.12g, %s\n", ci.lambda0_estimate, to_string(ci.verdict).c_str());

  const auto sys = piecewise_scale(entry.field, 0.5, -2.0);
  const auto& params = std::get<PiecewiseScaleParams>(sys.params);
  const auto bound = closed_form_bound(Theorem5Inputs{ci.lambda0_estimate, params});
  std::printf("c = %.6f, settling-time bound %.6f\n", params.c, bound.value);

  SimConfig cfg;
  cfg.stop_radius = 1e-6;
  for (double r : {1e-1, 1.0, 1e2, 1e4}) {
    Vector x0(2);
    x0 << r / std::sqrt(2.0), r / std::sqrt(2.0);
    const auto traj = integrate(sys, x0, cfg);
    const auto t = settling_time(traj, cfg.stop_radius);
    std::printf("|x0| = %8.0e  T = %.6f\n", r, t ? *t : -1.0);
  }
}
