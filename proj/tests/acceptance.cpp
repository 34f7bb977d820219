// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fxts/catalog.hpp"
#include "fxts/lyapunov.hpp"
#include "fxts/phi.hpp"
#include "fxts/scaling.hpp"
#include "fxts/settling.hpp"
#include "fxts/sim.hpp"

namespace fs = std::filesystem;
using namespace fxts;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;  // <= 0: no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string point(const Vector& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ", " : "") + fmt("%.6g", x(i));
  return s + ")";
}

Vector scalar(double v) {
  Vector x(1);
  x << v;
  return x;
}

// Time for x' = -(x^(1/2) + x^3) to go from r down to eps.
double eq5_scalar_time(double r, double eps) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [](double x) { return 1.0 / (std::sqrt(x) + x * x * x); };
  if (r <= 1.0) return ts.integrate(f, eps, r);
  // x = 1/u on [1, r] keeps the interval finite and the integrand smooth.
  auto g = [](double u) { return u / (std::pow(u, 2.5) + 1.0); };
  return ts.integrate(f, eps, 1.0) + ts.integrate(g, 1.0 / r, 1.0);
}

Outcome theorem4_bound_honored() {
  const auto sys = fxts_scale(catalog_get("linear_contraction:n=1").field, {0.5, -2.0});
  const auto bound = closed_form_bound(Theorem4Inputs{2.0, {0.5, -2.0}});
  SimConfig cfg;
  cfg.stop_radius = 1e-6;
  cfg.t_max = 100.0;
  const std::vector<double> radii{1.0, 1e2, 1e4, 1e6};
  const auto prof = sweep(sys, radii, {scalar(1.0)}, cfg, bound);

  bool ok = std::abs(bound.value - 2.5) < 1e-15;
  double t_max = 0.0;
  double time_err = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const auto& t = prof.times[i][0];
    if (!t) return {false, "radius " + fmt("%g", radii[i]) + " did not settle"};
    t_max = std::max(t_max, *t);
    ok = ok && *t <= bound.value;
    time_err = std::max(time_err, std::abs(*t - eq5_scalar_time(radii[i], 1e-6)));
  }
  const double sat = *prof.times[3][0] - *prof.times[2][0];
  ok = ok && sat < 0.01;

  // V = |x| gives V' = -(V^(1/2) + V^3): the limit r -> inf, eps -> 0.
  const double limit = settling_integral(make_polyakov_phi({1.0, 1.0, 0.5, 3.0}), INFINITY).value;
  const double beta_oracle = 0.4 * boost::math::constants::pi<double>() / std::sin(boost::math::constants::pi<double>() / 5);
  const double limit_err = std::abs(limit - beta_oracle);
  ok = ok && limit_err < 1e-3 && time_err < 1e-3;
  return {ok, "max T " + fmt("%.6f", t_max) + " <= " + fmt("%.3g", bound.value) + ", T(1e6)-T(1e4) " + fmt("%.2e", sat) +
                  ", limit " + fmt("%.7f", limit) + " vs " + fmt("%.7f", beta_oracle) + ", T(1e6) " +
                  fmt("%.6f", *prof.times[3][0]) + ", max |T - exact time to eps| " + fmt("%.1e", time_err)};
}

Outcome unscaled_log_growth() {
  const auto e = catalog_get("linear_contraction:n=1");
  SimConfig cfg;
  cfg.stop_radius = 1e-6;
  cfg.t_max = 100.0;
  const auto t10 = settling_time(integrate(e.field, scalar(10.0), cfg), 1e-6);
  const auto t100 = settling_time(integrate(e.field, scalar(100.0), cfg), 1e-6);
  if (!t10 || !t100) return {false, "trajectory did not settle"};
  const double ratio = *t10 / *t100;
  const double expect = std::log(1e7) / std::log(1e8);
  const double rel = std::abs(ratio / expect - 1.0);
  return {rel < 1e-2, "ratio " + fmt("%.6f", ratio) + " vs " + fmt("%.6f", expect) + ", rel err " + fmt("%.1e", rel)};
}

Outcome lemma3_quadrature() {
  double worst = 0.0;
  for (double c : {0.5, 1.0, 2.0})
    for (double alpha : {0.1, 0.5, 0.9})
      for (double v0 : {0.01, 1.0, 100.0}) {
        const double q = settling_integral(make_power_phi(c, alpha), v0).value;
        const double exact = std::pow(v0, 1.0 - alpha) / (c * (1.0 - alpha));
        worst = std::max(worst, std::abs(q / exact - 1.0));
      }
  return {worst < 1e-8, "27 cells, max rel err " + fmt("%.2e", worst)};
}

Outcome theorem1_domination() {
  double min_gap = INFINITY;
  bool strict = true;
  for (double a : {0.5, 1.0, 2.0})
    for (double b : {0.5, 1.0, 2.0})
      for (double p : {0.2, 0.5, 0.8})
        for (double q : {1.5, 2.0, 3.0}) {
          const PolyakovParams pp{a, b, p, q};
          const double integral = settling_integral(make_polyakov_phi(pp), INFINITY).value;
          const double bound = closed_form_bound(pp).value;
          strict = strict && integral < bound;
          min_gap = std::min(min_gap, (bound - integral) / bound);
        }
  return {strict, "81 cells, min relative gap " + fmt("%.3e", min_gap)};
}

Outcome theorem5_constant_and_continuity() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(0.1, 0.9);
  std::uniform_real_distribution<double> ub(-10.0, -0.1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst_c = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto pr = compute_c_and_exponents(ua(rng), ub(rng));
    const double lhs = std::pow(pr.c, 2.0 - pr.p) * (2.0 - pr.alpha);
    const double rhs = std::pow(pr.c, 2.0 - pr.q) * (2.0 - pr.beta);
    worst_c = std::max(worst_c, std::abs(lhs - rhs));
  }
  const auto base = catalog_get("quadratic_gradient:q=1,4,9").field;
  double worst_jump = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto sys = piecewise_scale(base, ua(rng), ub(rng));
    Vector d(3);
    for (Eigen::Index i = 0; i < 3; ++i) d(i) = gauss(rng);
    const Vector x = d / evaluate(base, d).norm();  // |f(x)| = 1
    const Vector lo = evaluate(sys.field, Vector(x * (1.0 - 1e-12)));
    const Vector hi = evaluate(sys.field, Vector(x * (1.0 + 1e-12)));
    worst_jump = std::max(worst_jump, (hi - lo).norm() / hi.norm());
  }
  return {worst_c < 1e-12 && worst_jump < 1e-7,
          "max |c identity| " + fmt("%.2e", worst_c) + ", max relative jump at |f| = 1 " + fmt("%.2e", worst_jump)};
}

Outcome condition_verifiers() {
  SamplingPlan plan;
  plan.count = 1000;
  plan.grid_radii = 0;
  const auto lin = verify_condition_i(catalog_get("linear_contraction").field, plan, HConvention::theorem4);
  const auto quad = verify_condition_i(catalog_get("quadratic_gradient:q=1,4").field, plan, HConvention::theorem5);
  const auto rot = verify_condition_i(catalog_get("rotation_contraction").field, plan, HConvention::theorem4);
  const double e1 = std::abs(lin.lambda0_estimate - 2.0);
  const double e2 = std::abs(quad.lambda0_estimate - 1.0);
  const double e3 = std::abs(rot.lambda0_estimate - 2.0);
  const bool ok = e1 < 1e-9 && e2 < 1e-9 && e3 < 1e-9 && rot.verdict == Verdict::condition_i_holds &&
                  lin.sample_count == 1000;
  return {ok, "linear " + fmt("%.12f", lin.lambda0_estimate) + ", quadratic " + fmt("%.12f", quad.lambda0_estimate) +
                  ", rotation " + fmt("%.12f", rot.lambda0_estimate) + " (" + to_string(rot.verdict) + ")"};
}

Outcome second_order_chain() {
  const auto base = catalog_get("quadratic_gradient:q=1,4").field;
  const auto sys = piecewise_scale(base, 0.5, -2.0);
  const auto phi = make_piecewise_phi(std::get<PiecewiseScaleParams>(sys.params), 1.0);
  SamplingPlan plan;
  plan.domain = Annulus{1e-2, 10.0};
  plan.count = 1000;
  plan.grid_radii = 0;
  const auto rep = verify_second_order(sys, VSelector::norm_sq_of_f, phi, plan, 1e-6, 1e-3);
  std::string detail = "worst margin " + fmt("%.4g", rep.worst_margin) + " at " + point(rep.worst_point) + ", " +
                       std::to_string(rep.failing_count) + "/" + std::to_string(rep.sample_count) + " below -1e-3, " +
                       std::to_string(rep.skipped_count) + " skipped";
  if (rep.worst_point.size() > 0) {
    const double vdot = lie_derivative(sys, VSelector::norm_sq_of_f, rep.worst_point);
    detail += ", -Vdot there " + fmt("%.4g", -vdot) + ", |f| " + fmt("%.4g", evaluate(base, rep.worst_point).norm());
  }
  return {rep.holds && rep.worst_margin >= -1e-3, detail};
}

Outcome trajectory_invariance() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SimConfig cfg;
  cfg.t_max = 20.0;
  cfg.stop_radius = 1e-6;
  cfg.record_v = VSelector::norm_sq_of_f;
  std::size_t runs = 0;
  std::size_t bad = 0;
  double worst = 0.0;
  std::string worst_where;
  for (const auto& name : catalog_names()) {
    const auto base = catalog_get(name).field;
    const std::vector<std::pair<std::string, ScaledSystem>> variants{
        {"unscaled", unscaled(base)}, {"eq5", fxts_scale(base, {0.5, -2.0})}, {"eq6", piecewise_scale(base, 0.5, -2.0)}};
    for (const auto& [label, sys] : variants) {
      for (double r : {0.3, 3.0}) {
        for (int k = 0; k < 2; ++k) {
          Vector d(static_cast<Eigen::Index>(base.dimension));
          for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = gauss(rng);
          const auto traj = integrate(sys, Vector(r * d / d.norm()), cfg);
          const auto audit = audit_v_monotonicity(traj.v_values, 1e-9);
          ++runs;
          if (traj.termination == Termination::step_failure || !audit.non_increasing ||
              !audit.stays_in_initial_sublevel) {
            ++bad;
          }
          if (audit.worst_relative_increase > worst || worst_where.empty()) {
            worst = audit.worst_relative_increase;
            worst_where = name + "/" + label;
          }
        }
      }
    }
  }
  return {bad == 0, std::to_string(runs) + " trajectories, " + std::to_string(bad) + " violations, largest relative V step up " +
                        fmt("%.2e", worst) + " (" + worst_where + ")"};
}

Outcome rk4_order() {
  const auto e = catalog_get("linear_contraction:n=1");
  SimConfig cfg;
  cfg.t_max = 1.0;
  double prev = 0.0;
  double min_ratio = INFINITY;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    cfg.method = Rk4Fixed{dt};
    const double err = std::abs(integrate(e.field, scalar(1.0), cfg).states.back()(0) - std::exp(-1.0));
    if (prev > 0.0) min_ratio = std::min(min_ratio, prev / err);
    prev = err;
  }
  return {min_ratio >= 12.0, "min error ratio per halving " + fmt("%.3f", min_ratio)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("fxts_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = FXTS_CLI_PATH;
  auto p = [&](const char* name) { return "'" + (dir / name).string() + "'"; };
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"sweep --system cubic_gradient:n=3 --scale eq6:alpha=0.5,beta=-2 --radii 1,1e2,1e4 --directions 4 --seed 3 --eps 1e-6"
       " --out " + p("sweep.csv") + " --report " + p("sweep.json"),
       {"sweep.csv", "sweep.json"}},
      {"compare --system linear_contraction --directions 2 --seed 9 --plot-data " + p("compare.csv") + " --report " +
           p("compare.json"),
       {"compare.csv", "compare.json"}},
      {"verify --system quadratic_gradient:q=1,4 --condition i --convention theorem5 --samples 1000 --seed 7 --report " +
           p("verify.json"),
       {"verify.json"}},
      {"simulate --system rotation_contraction --scale eq5 --x0 3,-1 --out " + p("traj.csv") + " --plot-data " +
           p("traj_plot.csv"),
       {"traj.csv", "traj_plot.csv"}},
  };
  std::size_t compared = 0;
  std::string mismatch;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::vector<std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string stdout_path = (dir / ("stdout" + std::to_string(k))).string();
      const std::string cmd = "'" + cli + "' " + runs[k].first + " > '" + stdout_path + "'";
      if (std::system(cmd.c_str()) != 0) {
        fs::remove_all(dir);
        return {false, "command failed: " + runs[k].first.substr(0, runs[k].first.find(' '))};
      }
      std::vector<std::string> got{slurp(stdout_path)};
      for (const auto& f : runs[k].second) got.push_back(slurp(dir / f));
      if (rep == 0) {
        first = got;
      } else {
        for (std::size_t i = 0; i < got.size(); ++i) {
          ++compared;
          if (got[i] != first[i] || got[i].empty()) mismatch += (i == 0 ? "stdout" : runs[k].second[i - 1]) + " ";
        }
      }
      for (const auto& f : runs[k].second) fs::remove(dir / f);
    }
  }
  fs::remove_all(dir);
  return {mismatch.empty(), std::to_string(compared) + " artifacts compared across repeated runs" +
                                (mismatch.empty() ? "" : ", differing: " + mismatch)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "eq5 settling times honor the theorem4 bound and saturate", 5.0, theorem4_bound_honored},
      {2, "unscaled settling time grows like log of the radius", 1.0, unscaled_log_growth},
      {3, "settling integral matches the lemma3 closed form", 1.0, lemma3_quadrature},
      {4, "theorem1 bound strictly dominates the settling integral", 2.0, theorem1_domination},
      {5, "theorem5 constant c and eq6 continuity at |f| = 1", 1.0, theorem5_constant_and_continuity},
      {6, "condition verifiers exact on the linear catalog", 2.0, condition_verifiers},
      {7, "second-order decrease on eq6 quadratic_gradient", 5.0, second_order_chain},
      {8, "|f|^2 non-increasing along every catalog trajectory", 5.0, trajectory_invariance},
      {9, "rk4 error ratio per step halving", 1.0, rk4_order},
      {10, "CLI artifacts byte-identical across repeated runs", 0.0, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %2d %s: %s; %.3f s%s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(), out.detail.c_str(), secs,
                in_time ? "" : fmt(" exceeds the %.0f s budget", c.budget_s).c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
