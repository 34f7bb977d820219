#pragma once

#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "fxts/catalog.hpp"
#include "fxts/classify.hpp"
#include "fxts/cli/outputs.hpp"
#include "fxts/cli/run_config.hpp"
#include "fxts/lyapunov.hpp"
#include "fxts/phi.hpp"
#include "fxts/scaling.hpp"
#include "fxts/settling.hpp"
#include "fxts/sim.hpp"

namespace fxts::cli {

namespace detail {

[[noreturn]] inline void usage(const std::string& what) { fxts::detail::fail(ErrorCode::input, "cli_harness", what); }

inline Json scale_json(const ScaledSystem& sys) {
  Json j;
  j["kind"] = to_string(sys.kind);
  if (const auto* e = std::get_if<ScaleExponentsEq5>(&sys.params)) {
    j["p"] = e->p;
    j["q"] = e->q;
  } else if (const auto* pw = std::get_if<PiecewiseScaleParams>(&sys.params)) {
    j["alpha"] = pw->alpha;
    j["beta"] = pw->beta;
    j["c"] = pw->c;
    j["p"] = pw->p;
    j["q"] = pw->q;
  }
  return j;
}

inline Json bound_json(const SettlingBound& b) {
  Json j;
  j["value"] = json_number(b.value);
  j["kind"] = to_string(b.kind);
  j["formula_id"] = b.formula_id;
  j["achieved_tolerance"] = json_number(b.achieved_tolerance);
  Json inputs = Json::object();
  for (const auto& [k, v] : b.inputs_echo) inputs[k] = json_number(v);
  j["inputs"] = inputs;
  return j;
}

inline SimConfig sim_config(const RunConfig& cfg) {
  SimConfig sc;
  if (cfg.method == "rk45") {
    sc.method = Rk45Adaptive{cfg.rtol, cfg.atol, cfg.dt_min, cfg.dt_max};
  } else if (cfg.method == "rk4") {
    sc.method = Rk4Fixed{cfg.dt};
  } else {
    usage("unknown --method '" + cfg.method + "' (expected rk45 or rk4)");
  }
  sc.t_max = cfg.t_max;
  sc.stop_radius = cfg.eps;
  sc.settle_dwell = cfg.dwell;
  sc.record_stride = static_cast<std::size_t>(cfg.stride);
  return sc;
}

inline Json sim_params(const RunConfig& cfg) {
  Json j;
  j["method"] = cfg.method;
  if (cfg.method == "rk4") {
    j["dt"] = cfg.dt;
  } else {
    j["rtol"] = cfg.rtol;
    j["atol"] = cfg.atol;
    j["dt_min"] = cfg.dt_min;
    j["dt_max"] = cfg.dt_max;
  }
  j["t_max"] = cfg.t_max;
  j["eps"] = cfg.eps;
  j["dwell"] = json_number(effective_dwell(sim_config(cfg)));
  return j;
}

inline std::optional<VSelector> parse_v(const std::string& v, bool allow_none) {
  if (v == "normsq") return VSelector::norm_sq_of_f;
  if (v == "potential") return VSelector::potential;
  if (allow_none && v == "none") return std::nullopt;
  usage("unknown --v '" + v + "'");
}

inline std::vector<Vector> directions(const RunConfig& cfg, std::size_t dim) {
  if (cfg.directions == 0) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(dim));
    e(0) = 1.0;
    return {e};
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> out;
  while (out.size() < cfg.directions) {
    Vector d(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = normal(rng);
    if (d.norm() > 1e-12) out.push_back(d / d.norm());
  }
  return out;
}

inline SamplingPlan sampling_plan(const RunConfig& cfg) {
  SamplingPlan plan;
  const auto d = parse_spec(cfg.domain);
  if (d.name == "annulus") {
    plan.domain = Annulus{d.get_double("r_min", 1e-3), d.get_double("r_max", 1e3)};
  } else if (d.name == "ball") {
    plan.domain = Ball{d.get_double("radius", 1.0)};
  } else {
    usage("unknown --domain '" + d.name + "' (expected annulus or ball)");
  }
  plan.count = static_cast<std::size_t>(cfg.samples);
  plan.seed = cfg.seed;
  plan.grid_radii = static_cast<std::size_t>(cfg.grid_radii);
  return plan;
}

/// Reference bound for a scaled catalog system: theorem4 for eq5 and
/// theorem5 for eq6 on a gradient field, when lambda0 is known and positive.
inline std::optional<SettlingBound> reference_bound(const CatalogEntry& entry, const ScaledSystem& sys) {
  if (!entry.known_constants) return std::nullopt;
  if (const auto* e = std::get_if<ScaleExponentsEq5>(&sys.params)) {
    if (entry.known_constants->lambda0_theorem4 > 0.0)
      return closed_form_bound(Theorem4Inputs{entry.known_constants->lambda0_theorem4, *e});
  } else if (const auto* pw = std::get_if<PiecewiseScaleParams>(&sys.params)) {
    if (entry.field.gradient_field && entry.known_constants->lambda0_theorem5 > 0.0)
      return closed_form_bound(Theorem5Inputs{entry.known_constants->lambda0_theorem5, *pw});
  }
  return std::nullopt;
}

inline Json profile_json(const SettlingProfile& prof) {
  Json cells = Json::array();
  const bool has_bound = prof.bound_reference.has_value();
  const double bound = has_bound ? prof.bound_reference->value : NAN;
  for (std::size_t i = 0; i < prof.radii.size(); ++i) {
    for (std::size_t j = 0; j < prof.directions.size(); ++j) {
      const auto& t = prof.times[i][j];
      Json c;
      c["radius"] = json_number(prof.radii[i]);
      c["direction_index"] = j;
      c["t_settle"] = json_number(t);
      c["termination"] = to_string(prof.terminations[i][j]);
      c["margin"] = t && has_bound ? json_number(bound - *t) : Json(nullptr);
      cells.push_back(c);
    }
  }
  Json j;
  j["cells"] = cells;
  j["saturation_delta"] = json_number(prof.saturation_delta);
  j["bound"] = prof.bound_reference ? bound_json(*prof.bound_reference) : Json(nullptr);
  return j;
}

inline Json classification_json(const Classification& c) {
  Json j;
  j["evidence"] = to_string(c.evidence);
  j["rule"] = c.rule;
  j["settled_cells"] = c.settled_cells;
  j["total_cells"] = c.total_cells;
  j["radius_decades"] = json_number(c.radius_decades);
  j["max_settling_time"] = json_number(c.max_settling_time);
  j["saturation_delta"] = json_number(c.saturation_delta);
  if (c.log_fit) {
    j["log_fit"] = {{"slope", json_number(c.log_fit->slope)},
                    {"intercept", json_number(c.log_fit->intercept)},
                    {"r2", json_number(c.log_fit->r2)}};
  } else {
    j["log_fit"] = nullptr;
  }
  return j;
}

struct Outcome {
  Envelope envelope;
  ArtifactSet artifacts;
  int exit_code = 0;
  std::optional<Json> late_error;  // reported after artifacts are written
};

inline Outcome run_simulate(const RunConfig& cfg) {
  Outcome o;
  const auto entry = catalog_get(cfg.system);
  const auto sys = apply_scale(entry.field, parse_spec(cfg.scale));
  if (cfg.x0.empty()) usage("simulate needs --x0");
  const Vector x0 = Eigen::Map<const Vector>(cfg.x0.data(), static_cast<Eigen::Index>(cfg.x0.size()));
  auto sc = sim_config(cfg);
  sc.record_v = parse_v(cfg.v, true);
  sc.record_normf = sc.record_v.has_value();
  o.envelope.params = {{"system", to_string(parse_spec(cfg.system))}, {"scale", scale_json(sys)},
                       {"x0", json_vector(x0)},                      {"sim", sim_params(cfg)},
                       {"v", cfg.v},                                 {"stride", cfg.stride}};
  const auto traj = integrate(sys, x0, sc);
  Json r;
  r["termination"] = to_string(traj.termination);
  const bool confirmed = traj.settle_event && traj.settle_event->confirmed;
  r["t_settle"] = confirmed ? json_number(traj.settle_event->t_settle) : Json(nullptr);
  r["final_time"] = json_number(traj.times.empty() ? 0.0 : traj.times.back());
  r["final_state"] = traj.states.empty() ? Json::array() : json_vector(traj.states.back());
  r["recorded_points"] = traj.times.size();
  r["accepted_steps"] = traj.accepted_steps;
  r["rejected_steps"] = traj.rejected_steps;
  if (!traj.v_values.empty()) {
    const auto audit = audit_v_monotonicity(traj.v_values);
    r["v_audit"] = {{"non_increasing", audit.non_increasing},
                    {"stays_in_initial_sublevel", audit.stays_in_initial_sublevel},
                    {"worst_relative_increase", json_number(audit.worst_relative_increase)}};
  }
  if (traj.termination == Termination::step_failure) {
    r["failure_reason"] = traj.failure_reason;
    o.exit_code = 3;
    o.late_error = Json{{"code", "sim_engine.numeric"}, {"message", traj.failure_reason}};
  }
  o.envelope.results.push_back(r);
  if (cfg.out) o.artifacts.add(*cfg.out, trajectory_csv(traj));
  if (cfg.plot_data) o.artifacts.add(*cfg.plot_data, trajectory_plot_csv(traj));
  return o;
}

inline Outcome run_verify(const RunConfig& cfg) {
  Outcome o;
  const auto entry = catalog_get(cfg.system);
  const auto sys = apply_scale(entry.field, parse_spec(cfg.scale));
  const auto plan = sampling_plan(cfg);
  Json echo = {{"system", to_string(parse_spec(cfg.system))},
               {"scale", scale_json(sys)},
               {"condition", cfg.condition},
               {"samples", cfg.samples},
               {"grid_radii", cfg.grid_radii},
               {"seed", cfg.seed},
               {"domain", cfg.domain}};
  Json r;
  r["condition"] = cfg.condition;
  if (cfg.condition == "i" || cfg.condition == "ii") {
    HConvention conv = HConvention::theorem4;
    if (cfg.convention == "theorem5") {
      conv = HConvention::theorem5;
    } else if (cfg.convention != "theorem4") {
      usage("unknown --convention '" + cfg.convention + "'");
    }
    echo["convention"] = cfg.convention;
    echo["threshold"] = cfg.threshold;
    const auto rep = cfg.condition == "i" ? verify_condition_i(entry.field, plan, conv, cfg.threshold)
                                          : verify_condition_ii(entry.field, plan, conv, cfg.threshold, cfg.zero_tol);
    if (cfg.condition == "ii") echo["zero_tol"] = cfg.zero_tol;
    r["lambda0_estimate"] = json_number(rep.lambda0_estimate);
    r["worst_point"] = json_vector(rep.worst_point);
    r["margins"] = {{"lambda0_minus_threshold", json_number(rep.lambda0_estimate - rep.threshold)},
                    {"min_eigenvalue", json_number(rep.min_eigenvalue)},
                    {"orthogonality_residual_max", json_number(rep.orthogonality_residual_max)}};
    r["verdict"] = to_string(rep.verdict);
    r["sample_count"] = rep.sample_count;
    for (const auto& w : rep.warnings) o.envelope.warnings.push_back(w);
  } else if (cfg.condition == "phi1" || cfg.condition == "phi2") {
    const auto selector = *parse_v(cfg.v, false);
    PhiFunction phi;
    if (cfg.phi) {
      phi = parse_phi(*cfg.phi);
      echo["phi"] = *cfg.phi;
    } else if (const auto* pw = std::get_if<PiecewiseScaleParams>(&sys.params);
               pw && entry.known_constants && entry.known_constants->lambda0_theorem5 > 0.0) {
      phi = make_piecewise_phi(*pw, entry.known_constants->lambda0_theorem5);
      echo["phi"] = "theorem5:alpha=" + format_double(pw->alpha) + ",beta=" + format_double(pw->beta) +
                    ",lambda0=" + format_double(entry.known_constants->lambda0_theorem5);
    } else {
      usage("verify --condition " + cfg.condition + " needs --phi");
    }
    echo["v"] = cfg.v;
    echo["tol"] = cfg.tol;
    if (cfg.condition == "phi2") echo["delta"] = cfg.delta;
    const auto rep = cfg.condition == "phi1" ? verify_phi_decrease(sys, selector, phi, plan, cfg.tol)
                                             : verify_second_order(sys, selector, phi, plan, cfg.delta, cfg.tol);
    r["lambda0_estimate"] = nullptr;
    r["worst_point"] = json_vector(rep.worst_point);
    Json failing = Json::array();
    for (const auto& x : rep.failing_points) failing.push_back(json_vector(x));
    r["margins"] = {{"worst", json_number(rep.worst_margin)},
                    {"failing_count", rep.failing_count},
                    {"skipped_count", rep.skipped_count},
                    {"failing_points", failing}};
    r["verdict"] = rep.holds ? "holds" : "fails";
    r["sample_count"] = rep.sample_count;
  } else {
    usage("unknown --condition '" + cfg.condition + "' (expected i, ii, phi1 or phi2)");
  }
  r["params_echo"] = echo;
  o.envelope.params = echo;
  o.envelope.results.push_back(r);
  return o;
}

inline double need(const std::optional<double>& v, const char* flag, const std::string& formula) {
  if (!v) usage("bound --formula " + formula + " needs " + flag);
  return *v;
}

inline Outcome run_bound(const RunConfig& cfg) {
  Outcome o;
  if (cfg.formula && cfg.phi) usage("bound takes either --formula or --phi, not both");
  Json r;
  if (cfg.formula) {
    const std::string& f = *cfg.formula;
    SettlingBound b;
    if (f == "lemma3") {
      b = closed_form_bound(Lemma3Inputs{need(cfg.c, "--c", f), need(cfg.alpha, "--alpha", f), need(cfg.v0, "--v0", f)});
    } else if (f == "theorem1") {
      b = closed_form_bound(PolyakovParams{need(cfg.a, "--a", f), need(cfg.b, "--b", f), need(cfg.p, "--p", f),
                                           need(cfg.q, "--q", f)});
    } else if (f == "theorem4") {
      b = closed_form_bound(Theorem4Inputs{need(cfg.lambda0, "--lambda0", f),
                                           ScaleExponentsEq5{need(cfg.p, "--p", f), need(cfg.q, "--q", f)}});
    } else if (f == "theorem5") {
      const auto params = compute_c_and_exponents(need(cfg.alpha, "--alpha", f), need(cfg.beta, "--beta", f));
      b = closed_form_bound(Theorem5Inputs{need(cfg.lambda0, "--lambda0", f), params});
    } else {
      usage("unknown --formula '" + f + "' (expected lemma3, theorem1, theorem4 or theorem5)");
    }
    o.envelope.params = {{"formula", f}};
    r = bound_json(b);
  } else if (cfg.phi) {
    if (!cfg.v0) usage("bound --phi needs --v0");
    const auto phi = parse_phi(*cfg.phi);
    const auto adm = phi_admissible(phi);
    const auto b = settling_integral(phi, *cfg.v0);
    o.envelope.params = {{"phi", *cfg.phi}, {"v0", json_number(*cfg.v0)}};
    r = bound_json(b);
    r["admissibility"] = to_string(adm.classification);
  } else {
    usage("bound needs --formula or --phi");
  }
  o.envelope.results.push_back(r);
  return o;
}

inline Outcome run_sweep(const RunConfig& cfg) {
  Outcome o;
  const auto entry = catalog_get(cfg.system);
  const auto sys = apply_scale(entry.field, parse_spec(cfg.scale));
  const auto dirs = directions(cfg, entry.field.dimension);
  const auto prof = sweep(sys, cfg.radii, dirs, sim_config(cfg), reference_bound(entry, sys));
  o.envelope.params = {{"system", to_string(parse_spec(cfg.system))},
                       {"scale", scale_json(sys)},
                       {"radii", cfg.radii},
                       {"directions", dirs.size()},
                       {"seed", cfg.seed},
                       {"sim", sim_params(cfg)}};
  o.envelope.results.push_back(profile_json(prof));
  if (cfg.out) o.artifacts.add(*cfg.out, sweep_csv(prof));
  return o;
}

inline Outcome run_compare(const RunConfig& cfg) {
  Outcome o;
  const auto entry = catalog_get(cfg.system);
  const auto dirs = directions(cfg, entry.field.dimension);
  const auto sc = sim_config(cfg);
  o.envelope.params = {{"system", to_string(parse_spec(cfg.system))},
                       {"radii", cfg.radii},
                       {"directions", dirs.size()},
                       {"seed", cfg.seed},
                       {"sim", sim_params(cfg)}};
  std::string plot = "variant,radius,direction_index,t_settle\n";
  const std::vector<std::pair<std::string, std::string>> variants = {
      {"unscaled", "none"}, {"eq5", cfg.eq5}, {"eq6", cfg.eq6}};
  for (const auto& [label, scale] : variants) {
    const auto sys = apply_scale(entry.field, parse_spec(scale));
    const auto prof = sweep(sys, cfg.radii, dirs, sc, reference_bound(entry, sys));
    const auto cls = classify(prof);
    Json r;
    r["variant"] = label;
    r["scale"] = scale_json(sys);
    r["profile"] = profile_json(prof);
    r["verdict"] = to_string(cls.evidence);
    r["classification"] = classification_json(cls);
    o.envelope.results.push_back(r);
    for (std::size_t i = 0; i < prof.radii.size(); ++i)
      for (std::size_t j = 0; j < prof.directions.size(); ++j)
        plot += label + "," + csv_number(prof.radii[i]) + "," + std::to_string(j) + "," +
                (prof.times[i][j] ? csv_number(*prof.times[i][j]) : "") + "\n";
  }
  o.envelope.warnings.push_back("classifications are sampled evidence, not proofs");
  if (cfg.plot_data) o.artifacts.add(*cfg.plot_data, plot);
  return o;
}

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::numeric:
    case ErrorCode::quadrature: return 3;
    case ErrorCode::io: return 4;
    default: return 2;
  }
}

inline void emit_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  Json j;
  j["error"] = {{"code", code}, {"message", message}};
  j["exit_code"] = exit_code;
  err << j.dump() << '\n';
}

}  // namespace detail

/// Runs one command. `args` excludes the program name. The JSON envelope goes
/// to `out` (and to --report when given); errors go to `err` as JSON.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Parser parser;
  RunConfig cfg;
  try {
    cfg = parser.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return parser.app().exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return parser.app().exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    detail::emit_error(err, "cli_harness.usage", e.what(), 2);
    return 2;
  } catch (const Error& e) {
    detail::emit_error(err, e.qualified_code(), e.what(), 2);
    return 2;
  }

  try {
    detail::Outcome o;
    switch (cfg.command) {
      case Command::simulate: o = detail::run_simulate(cfg); break;
      case Command::verify: o = detail::run_verify(cfg); break;
      case Command::bound: o = detail::run_bound(cfg); break;
      case Command::sweep: o = detail::run_sweep(cfg); break;
      case Command::compare: o = detail::run_compare(cfg); break;
    }
    o.envelope.command_echo = echo_string(cfg);
    const std::string report = o.envelope.to_json().dump(2) + "\n";
    if (cfg.report) o.artifacts.add(*cfg.report, report);
    o.artifacts.commit();
    out << report;
    if (o.late_error) {
      detail::emit_error(err, (*o.late_error)["code"].get<std::string>(), (*o.late_error)["message"].get<std::string>(),
                         o.exit_code);
    }
    return o.exit_code;
  } catch (const Error& e) {
    const int code = detail::exit_code_for(e.code());
    detail::emit_error(err, e.qualified_code(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    detail::emit_error(err, "cli_harness.internal", e.what(), 3);
    return 3;
  }
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, out, err);
}

}  // namespace fxts::cli
