#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fxts/lyapunov.hpp"
#include "fxts/parallel.hpp"
#include "fxts/scaling.hpp"
#include "fxts/settling.hpp"

namespace fxts {

struct Rk4Fixed {
  double dt = 1e-3;
  bool operator==(const Rk4Fixed&) const = default;
};

/// Dormand-Prince 5(4). dt_min is the near-origin step clamp: far from the
/// origin the step floor follows the local time scale |x|/|g(x)| instead.
struct Rk45Adaptive {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  double dt_min = 1e-12;
  double dt_max = 0.1;
  bool operator==(const Rk45Adaptive&) const = default;
};

struct SimConfig {
  std::variant<Rk4Fixed, Rk45Adaptive> method = Rk45Adaptive{};
  double t_max = 10.0;
  double stop_radius = 1e-9;
  std::optional<double> settle_dwell;  // default: 10 dt_min (rk45) or dt (rk4)
  std::size_t record_stride = 1;
  std::optional<VSelector> record_v;   // V of the base field along the path
  bool record_normf = false;           // |f(x)| of the base field

  bool operator==(const SimConfig&) const = default;
};

inline double effective_dwell(const SimConfig& cfg) {
  if (cfg.settle_dwell) return *cfg.settle_dwell;
  if (const auto* rk45 = std::get_if<Rk45Adaptive>(&cfg.method)) return 10.0 * rk45->dt_min;
  return std::get<Rk4Fixed>(cfg.method).dt;
}

enum class Termination { settled, t_max_reached, step_failure };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::settled: return "settled";
    case Termination::t_max_reached: return "t_max_reached";
    case Termination::step_failure: return "step_failure";
  }
  return "unknown";
}

struct SettleEvent {
  double t_settle = 0.0;
  bool confirmed = false;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> v_values;      // empty unless recorded
  std::vector<double> normf_values;  // empty unless recorded
  std::optional<SettleEvent> settle_event;
  Termination termination = Termination::t_max_reached;
  double stop_radius = 0.0;
  double settle_dwell = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::string failure_reason;
};

inline void validate(const SimConfig& cfg, const VectorFieldSpec& field) {
  auto bad = [](const std::string& what) { detail::fail(ErrorCode::parameter, "sim_engine", what); };
  if (!(cfg.t_max > 0.0) || !std::isfinite(cfg.t_max)) bad("t_max must be positive and finite");
  if (!(cfg.stop_radius > field.equilibrium_tolerance)) bad("stop radius must exceed the equilibrium tolerance");
  if (cfg.record_stride == 0) bad("record stride must be positive");
  if (cfg.settle_dwell && !(*cfg.settle_dwell >= 0.0)) bad("settle dwell must be nonnegative");
  if (const auto* rk45 = std::get_if<Rk45Adaptive>(&cfg.method)) {
    if (!(rk45->dt_min > 0.0 && rk45->dt_min < rk45->dt_max)) bad("rk45 requires 0 < dt_min < dt_max");
    if (!(rk45->rel_tol > 0.0) || !(rk45->abs_tol >= 0.0)) bad("rk45 tolerances must be positive");
  } else if (!(std::get<Rk4Fixed>(cfg.method).dt > 0.0)) {
    bad("rk4 step must be positive");
  }
}

namespace detail {

struct Dopri {
  // Butcher tableau of Dormand-Prince 5(4).
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b* (error coefficients)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

struct StepResult {
  Vector y;
  Vector err;
};

inline StepResult dopri_step(const VectorFieldSpec& g, const Vector& x, const Vector& k1, double h) {
  using D = Dopri;
  const Vector k2 = evaluate(g, x + h * (D::a21 * k1));
  const Vector k3 = evaluate(g, x + h * (D::a31 * k1 + D::a32 * k2));
  const Vector k4 = evaluate(g, x + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
  const Vector k5 = evaluate(g, x + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
  const Vector k6 = evaluate(g, x + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5));
  Vector y = x + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
  const Vector k7 = evaluate(g, y);
  Vector err = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);
  return {std::move(y), std::move(err)};
}

inline Vector rk4_step(const VectorFieldSpec& g, const Vector& x, double h) {
  const Vector k1 = evaluate(g, x);
  const Vector k2 = evaluate(g, x + 0.5 * h * k1);
  const Vector k3 = evaluate(g, x + 0.5 * h * k2);
  const Vector k4 = evaluate(g, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline double crossing_time(double t0, double n0, double t1, double n1, double eps) {
  if (n0 <= eps || n0 == n1) return t0;
  return t0 + (n0 - eps) / (n0 - n1) * (t1 - t0);
}

class Recorder {
 public:
  Recorder(const ScaledSystem& sys, const SimConfig& cfg, Trajectory& traj) : sys_(sys), cfg_(cfg), traj_(traj) {}

  void push(double t, const Vector& x) {
    if (!traj_.times.empty() && traj_.times.back() == t) return;
    traj_.times.push_back(t);
    traj_.states.push_back(x);
    if (cfg_.record_v) traj_.v_values.push_back(v_value(sys_.base, *cfg_.record_v, x));
    if (cfg_.record_normf) traj_.normf_values.push_back(evaluate(sys_.base, x).norm());
  }

 private:
  const ScaledSystem& sys_;
  const SimConfig& cfg_;
  Trajectory& traj_;
};

}  // namespace detail

/// Integrates x' = g(x) from x0. Settling is entry into the stop ball
/// followed by `settle_dwell` time inside it; the state is then snapped to
/// the origin and integration stops.
inline Trajectory integrate(const ScaledSystem& system, const Vector& x0, const SimConfig& cfg) {
  const auto& g = system.field;
  detail::check_dimension(g, x0, "sim_engine");
  if (!x0.allFinite()) detail::fail(ErrorCode::input, "sim_engine", "initial state is not finite");
  validate(cfg, g);

  Trajectory traj;
  traj.stop_radius = cfg.stop_radius;
  traj.settle_dwell = effective_dwell(cfg);
  detail::Recorder rec(system, cfg, traj);
  const double eps = cfg.stop_radius;
  const double dwell = traj.settle_dwell;

  double t = 0.0;
  Vector x = x0;
  rec.push(t, x);
  if (x.norm() <= g.equilibrium_tolerance) {
    traj.settle_event = SettleEvent{0.0, true};
    traj.termination = Termination::settled;
    return traj;
  }

  std::optional<double> entry;
  if (x.norm() <= eps) entry = 0.0;
  bool last_recorded = true;
  double t_prev = t;
  Vector x_prev = x;
  std::size_t step_index = 0;

  // Returns true when integration is finished.
  auto after_step = [&](double t_new, const Vector& x_new) -> bool {
    ++step_index;
    const double n_new = x_new.norm();
    const bool entering = n_new <= eps && !entry;
    if (entering) {
      if (!last_recorded) rec.push(t_prev, x_prev);
      entry = detail::crossing_time(t_prev, x_prev.norm(), t_new, n_new, eps);
    } else if (n_new > eps) {
      entry.reset();
    }
    t_prev = t_new;
    x_prev = x_new;
    last_recorded = entering || step_index % cfg.record_stride == 0;
    if (last_recorded) rec.push(t_new, x_new);
    if (entry && t_new - *entry >= dwell) {
      if (!last_recorded) rec.push(t_new, x_new);
      x = Vector::Zero(x.size());
      traj.settle_event = SettleEvent{*entry, true};
      traj.termination = Termination::settled;
      return true;
    }
    return false;
  };

  auto finish_at_tmax = [&] {
    if (!last_recorded) rec.push(t_prev, x_prev);
    if (entry) traj.settle_event = SettleEvent{*entry, false};
    traj.termination = Termination::t_max_reached;
  };

  if (const auto* rk4 = std::get_if<Rk4Fixed>(&cfg.method)) {
    while (t < cfg.t_max) {
      const double h = std::min(rk4->dt, cfg.t_max - t);
      Vector y = detail::rk4_step(g, x, h);
      if (!y.allFinite()) {
        traj.termination = Termination::step_failure;
        traj.failure_reason = "non-finite state";
        if (!last_recorded) rec.push(t_prev, x_prev);
        return traj;
      }
      const double t_new = (cfg.t_max - t <= rk4->dt) ? cfg.t_max : t + h;
      x = std::move(y);
      t = t_new;
      ++traj.accepted_steps;
      if (after_step(t, x)) return traj;
    }
    finish_at_tmax();
    return traj;
  }

  const auto& ctl = std::get<Rk45Adaptive>(cfg.method);
  Vector k1 = evaluate(g, x);
  double h = 0.0;
  {
    const double ng = k1.norm();
    h = ng > 0.0 ? 0.01 * std::max(x.norm(), eps) / ng : ctl.dt_max;
  }
  while (t < cfg.t_max) {
    const double ng = k1.norm();
    if (ng == 0.0) {
      // x is an equilibrium and stays put.
      if (x.norm() <= eps) {
        if (!entry) entry = t;
        const double t_done = std::max(t, *entry + dwell);
        if (t_done <= cfg.t_max && after_step(t_done, x)) return traj;
      }
      t = cfg.t_max;
      t_prev = t;
      x_prev = x;
      last_recorded = false;
      break;
    }
    const double ulp_floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    const double local_scale = 1e-6 * x.norm() / ng;
    const double floor = std::max(std::min(ctl.dt_min, local_scale), ulp_floor);
    const double remaining = cfg.t_max - t;
    h = std::clamp(h, floor, ctl.dt_max);
    bool last_step = false;
    if (h >= remaining) {
      h = remaining;
      last_step = true;
    }

    const auto step = detail::dopri_step(g, x, k1, h);
    double err_norm = 0.0;
    bool finite = step.y.allFinite() && step.err.allFinite();
    if (finite) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double sc = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(x(i)), std::abs(step.y(i)));
        err_norm = std::max(err_norm, sc > 0.0 ? std::abs(step.err(i)) / sc : (step.err(i) == 0.0 ? 0.0 : INFINITY));
      }
    }
    const bool at_floor = h <= floor * (1.0 + 1e-12) || (last_step && remaining <= floor);
    bool accept = finite && err_norm <= 1.0;
    if (!accept && at_floor) {
      // Hoelder region around the origin: accept the clamped step.
      const bool near_origin = x.norm() <= 1e3 * eps || (finite && step.y.norm() <= eps);
      if (finite && near_origin && floor >= ctl.dt_min * (1.0 - 1e-12)) {
        accept = true;
      } else {
        traj.termination = Termination::step_failure;
        traj.failure_reason = finite ? "error tolerance not met at the minimum step" : "non-finite state";
        if (!last_recorded) rec.push(t_prev, x_prev);
        return traj;
      }
    }
    if (!accept) {
      ++traj.rejected_steps;
      const double shrink = finite ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2)) : 0.2;
      h = std::max(floor, h * shrink);
      continue;
    }
    t = last_step ? cfg.t_max : t + h;
    x = step.y;
    ++traj.accepted_steps;
    k1 = evaluate(g, x);
    const double grow = err_norm > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2))) : 5.0;
    h *= grow;
    if (after_step(t, x)) return traj;
  }
  finish_at_tmax();
  return traj;
}

inline Trajectory integrate(const VectorFieldSpec& field, const Vector& x0, const SimConfig& cfg) {
  return integrate(unscaled(field), x0, cfg);
}

/// First entry time into the eps-ball (linear interpolation of |x| between
/// the bracketing samples) that is followed by `dwell` time inside the ball.
/// A trajectory that ends inside the ball after settling counts as confirmed.
inline std::optional<double> settling_time(const Trajectory& traj, double eps, std::optional<double> dwell = std::nullopt) {
  const double need = dwell.value_or(traj.settle_dwell);
  std::optional<double> entry;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double n = traj.states[k].norm();
    if (n <= eps) {
      if (!entry) {
        entry = k == 0 ? traj.times[0]
                       : detail::crossing_time(traj.times[k - 1], traj.states[k - 1].norm(), traj.times[k], n, eps);
      }
      if (traj.times[k] - *entry >= need) return entry;
    } else {
      entry.reset();
    }
  }
  if (entry && traj.termination == Termination::settled) return entry;
  return std::nullopt;
}

struct SettlingProfile {
  std::vector<double> radii;
  std::vector<Vector> directions;  // unit vectors
  // times[i][j]: radius i, direction j; nullopt when not settled.
  std::vector<std::vector<std::optional<double>>> times;
  std::vector<std::vector<Termination>> terminations;
  std::optional<SettlingBound> bound_reference;
  // |x| at the end of each cell and whether |x| never grew along the path
  std::vector<std::vector<double>> final_norms;
  std::vector<std::vector<bool>> norm_monotone;
  // max over directions of T(r_max) - T(r_max / 100)
  std::optional<double> saturation_delta;
};

/// Settling times over radius x direction. Cells run concurrently; the
/// profile is assembled in input order.
inline SettlingProfile sweep(const ScaledSystem& system, const std::vector<double>& radii,
                             const std::vector<Vector>& directions, const SimConfig& cfg,
                             std::optional<SettlingBound> bound_reference = std::nullopt) {
  if (radii.empty()) detail::fail(ErrorCode::parameter, "sim_engine", "sweep needs at least one radius");
  if (directions.empty()) detail::fail(ErrorCode::parameter, "sim_engine", "sweep needs at least one direction");
  SettlingProfile prof;
  prof.radii = radii;
  prof.bound_reference = std::move(bound_reference);
  for (const auto& d : directions) {
    detail::check_dimension(system.field, d, "sim_engine");
    const double nd = d.norm();
    if (!(nd > 0.0) || !std::isfinite(nd)) detail::fail(ErrorCode::parameter, "sim_engine", "sweep direction must be nonzero");
    prof.directions.push_back(d / nd);
  }
  for (double r : radii)
    if (!(r >= 0.0) || !std::isfinite(r)) detail::fail(ErrorCode::parameter, "sim_engine", "sweep radii must be finite and >= 0");

  const double r_max = *std::max_element(radii.begin(), radii.end());
  const double r_ref = r_max / 100.0;
  const bool ref_listed = std::find(radii.begin(), radii.end(), r_ref) != radii.end();
  std::vector<double> all_radii = radii;
  if (!ref_listed) all_radii.push_back(r_ref);

  const std::size_t nr = all_radii.size();
  const std::size_t nd = prof.directions.size();
  struct Cell {
    std::optional<double> t;
    Termination term = Termination::t_max_reached;
    double final_norm = NAN;
    bool monotone = false;
  };
  const auto cells = parallel_map<Cell>(nr * nd, [&](std::size_t idx) {
    const std::size_t i = idx / nd;
    const std::size_t j = idx % nd;
    Cell c;
    try {
      const auto traj = integrate(system, Vector(all_radii[i] * prof.directions[j]), cfg);
      c.term = traj.termination;
      if (traj.settle_event && traj.settle_event->confirmed) c.t = traj.settle_event->t_settle;
      c.final_norm = traj.states.empty() ? NAN : traj.states.back().norm();
      c.monotone = true;
      for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const double prev = traj.states[k - 1].norm();
        if (traj.states[k].norm() > prev * (1.0 + 1e-12)) c.monotone = false;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::numeric) throw;
      c.term = Termination::step_failure;
    }
    return c;
  });

  auto cell_time = [&](std::size_t i, std::size_t j) { return cells[i * nd + j].t; };
  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::vector<std::optional<double>> row;
    std::vector<Termination> terms;
    std::vector<double> finals;
    std::vector<bool> mono;
    for (std::size_t j = 0; j < nd; ++j) {
      const auto& c = cells[i * nd + j];
      row.push_back(c.t);
      terms.push_back(c.term);
      finals.push_back(c.final_norm);
      mono.push_back(c.monotone);
    }
    prof.times.push_back(std::move(row));
    prof.terminations.push_back(std::move(terms));
    prof.final_norms.push_back(std::move(finals));
    prof.norm_monotone.push_back(std::move(mono));
  }
  const std::size_t i_max = static_cast<std::size_t>(std::max_element(radii.begin(), radii.end()) - radii.begin());
  const std::size_t i_ref =
      ref_listed ? static_cast<std::size_t>(std::find(radii.begin(), radii.end(), r_ref) - radii.begin()) : nr - 1;
  std::optional<double> delta;
  for (std::size_t j = 0; j < nd; ++j) {
    const auto a = cell_time(i_max, j);
    const auto b = cell_time(i_ref, j);
    if (!a || !b) {
      delta.reset();
      break;
    }
    delta = delta ? std::max(*delta, *a - *b) : *a - *b;
  }
  prof.saturation_delta = delta;
  return prof;
}

/// Sublevel-set audit of a recorded V sequence.
struct VMonotonicityAudit {
  bool non_increasing = true;
  bool stays_in_initial_sublevel = true;
  double worst_relative_increase = 0.0;
  std::size_t worst_index = 0;
};

/// V_{k+1} <= V_k + slack * max(1, V_k) at every recorded step, and
/// V_k <= V_0 + slack * max(1, V_0) throughout.
inline VMonotonicityAudit audit_v_monotonicity(const std::vector<double>& v, double slack = 1e-9) {
  VMonotonicityAudit audit;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double rel = (v[k] - v[k - 1]) / std::max(1.0, v[k - 1]);
    if (rel > audit.worst_relative_increase) {
      audit.worst_relative_increase = rel;
      audit.worst_index = k;
    }
    if (rel > slack) audit.non_increasing = false;
    if (v[k] > v[0] + slack * std::max(1.0, v[0])) audit.stays_in_initial_sublevel = false;
  }
  return audit;
}

}  // namespace fxts
