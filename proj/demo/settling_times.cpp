// Settling times of x' = -x with and without the two-term scaling, next to
// the closed-form bound for the scaled system.
#include <cstdio>

#include "fxts/catalog.hpp"
#include "fxts/scaling.hpp"
#include "fxts/settling.hpp"
#include "fxts/sim.hpp"

int main() {
  using namespace fxts;
  const auto entry = catalog_get("linear_contraction:n=1");
  const ScaleExponentsEq5 exps{0.5, -2.0};
  const auto plain = unscaled(entry.field);
  const auto scaled = fxts_scale(entry.field, exps);
  const auto bound = closed_form_bound(Theorem4Inputs{entry.known_constants->lambda0_theorem4, exps});

  SimConfig cfg;
  cfg.t_max = 50.0;
  cfg.stop_radius = 1e-6;

  std::printf("%10s %14s %14s %10s\n", "|x0|", "T unscaled", "T eq5", "bound");
  for (double r : {1.0, 1e2, 1e4, 1e6}) {
    Vector x0(1);
    x0 << r;
    const auto a = integrate(plain, x0, cfg);
    const auto b = integrate(scaled, x0, cfg);
    const auto ta = settling_time(a, cfg.stop_radius);
    const auto tb = settling_time(b, cfg.stop_radius);
    std::printf("%10.0e %14.6f %14.6f %10.4f\n", r, ta ? *ta : -1.0, tb ? *tb : -1.0, bound.value);
  }
}
