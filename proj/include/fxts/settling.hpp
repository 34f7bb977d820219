#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fxts/phi.hpp"
#include "fxts/quadrature.hpp"

namespace fxts {

enum class Admissibility { not_admissible, finite_time, fixed_time };

inline std::string to_string(Admissibility a) {
  switch (a) {
    case Admissibility::not_admissible: return "not_admissible";
    case Admissibility::finite_time: return "finite_time";
    case Admissibility::fixed_time: return "fixed_time";
  }
  return "unknown";
}

struct AdmissibilityReport {
  Admissibility classification = Admissibility::not_admissible;
  bool zero_at_origin = false;
  bool sign_ok = false;
  bool monotone = false;
  // First grid pair (r_i < r_j) with phi(r_i) >= phi(r_j), or first r with phi(r) <= 0.
  std::optional<std::pair<double, double>> witness;
  bool integrable_at_zero = false;
  bool bounded_tail = false;
  // "declared_exponent" or "decade_heuristic" per end.
  std::string zero_method;
  std::string tail_method;
  std::vector<double> zero_decade_ratios;
  std::vector<double> tail_decade_ratios;
};

/// Logarithmic probe grid 1e-8 .. 1e8, 20 points per decade.
inline std::vector<double> default_probe_grid() {
  std::vector<double> grid;
  for (int k = -160; k <= 160; ++k) grid.push_back(std::pow(10.0, k / 20.0));
  return grid;
}

namespace detail {

inline double decade_integral(const PhiFunction& phi, double lo, double hi) {
  const auto res = quad::integrate_adaptive([&phi](double v) { return 1.0 / phi_eval(phi, v); }, lo, hi, 1e-10);
  return res.value;
}

// Tail integrals over successive decades must shrink by a ratio below 0.9
// for three consecutive decades.
inline bool decays_geometrically(const std::vector<double>& ratios) {
  if (ratios.size() < 3) return false;
  for (std::size_t i = ratios.size() - 3; i < ratios.size(); ++i)
    if (!(ratios[i] < 0.9)) return false;
  return true;
}

}  // namespace detail

/// Checks phi(0) = 0, r phi(r) > 0 and strict monotonicity on the grid, and
/// classifies integrability of 1/phi at 0 (finite time) and at infinity
/// (fixed time). Declared endpoint exponents decide the class when present;
/// otherwise decade integrals are used, which is a heuristic.
inline AdmissibilityReport phi_admissible(const PhiFunction& phi, const std::vector<double>& probe_grid = default_probe_grid()) {
  AdmissibilityReport rep;
  rep.zero_at_origin = phi_eval(phi, 0.0) == 0.0;
  rep.sign_ok = true;
  rep.monotone = true;
  double prev_r = 0.0;
  double prev_v = 0.0;
  for (double r : probe_grid) {
    if (!(r > 0.0)) continue;
    const double v = phi_eval(phi, r);
    if (rep.sign_ok && !(v > 0.0)) {
      rep.sign_ok = false;
      if (!rep.witness) rep.witness = std::make_pair(r, r);
    }
    // Past overflow both values are inf; compare in the log domain there.
    const bool increasing = std::isinf(v) && std::isinf(prev_v)
                                ? phi_log_eval(phi, std::log(r)) > phi_log_eval(phi, std::log(prev_r))
                                : v > prev_v;
    if (rep.monotone && !increasing) {
      rep.monotone = false;
      if (!rep.witness) rep.witness = std::make_pair(prev_r, r);
    }
    prev_r = r;
    prev_v = v;
  }
  if (!(rep.zero_at_origin && rep.sign_ok && rep.monotone)) return rep;

  for (int k = 0; k < 12; ++k) {
    const double i_hi = detail::decade_integral(phi, std::pow(10.0, -k - 1), std::pow(10.0, -k));
    const double i_lo = detail::decade_integral(phi, std::pow(10.0, -k - 2), std::pow(10.0, -k - 1));
    rep.zero_decade_ratios.push_back(i_lo / i_hi);
  }
  for (int k = 0; k < 7; ++k) {
    const double i_lo = detail::decade_integral(phi, std::pow(10.0, k), std::pow(10.0, k + 1));
    const double i_hi = detail::decade_integral(phi, std::pow(10.0, k + 1), std::pow(10.0, k + 2));
    rep.tail_decade_ratios.push_back(i_hi / i_lo);
  }
  if (phi.endpoint_exponent_at_zero) {
    rep.zero_method = "declared_exponent";
    rep.integrable_at_zero = *phi.endpoint_exponent_at_zero < 1.0;
  } else {
    rep.zero_method = "decade_heuristic";
    rep.integrable_at_zero = detail::decays_geometrically(rep.zero_decade_ratios);
  }
  if (phi.exponent_at_infinity) {
    rep.tail_method = "declared_exponent";
    rep.bounded_tail = *phi.exponent_at_infinity > 1.0;
  } else {
    rep.tail_method = "decade_heuristic";
    rep.bounded_tail = detail::decays_geometrically(rep.tail_decade_ratios);
  }
  if (rep.integrable_at_zero) {
    rep.classification = rep.bounded_tail ? Admissibility::fixed_time : Admissibility::finite_time;
  }
  return rep;
}

enum class BoundKind { closed_form, quadrature };

inline std::string to_string(BoundKind k) { return k == BoundKind::closed_form ? "closed_form" : "quadrature"; }

struct SettlingBound {
  double value = 0.0;  // may be +infinity
  BoundKind kind = BoundKind::closed_form;
  std::string formula_id;
  std::vector<std::pair<std::string, double>> inputs_echo;
  double achieved_tolerance = 0.0;
};

namespace detail {

struct Accum {
  double value = 0.0;
  double error = 0.0;

  void add(const quad::QuadResult& r, const char* where) {
    if (!r.converged) {
      fail(ErrorCode::quadrature, "settling_bounds",
           std::string("quadrature did not converge on ") + where + " (declared endpoint exponent inconsistent with phi?)");
    }
    value += r.value;
    error += r.error;
  }
};

inline constexpr double settling_rel_tol = 1e-10;

// integral over (0, upper] of dV/phi, upper <= 1.
inline void integrate_head(const PhiFunction& phi, double upper, Accum& acc) {
  if (phi.endpoint_exponent_at_zero) {
    // V = w^k with k = 1/(1 - p0); dV/phi(V) = k w^(k-1)/phi(w^k) dw, bounded at w = 0.
    const double p0 = *phi.endpoint_exponent_at_zero;
    const double k = 1.0 / (1.0 - p0);
    const double w_max = std::pow(upper, 1.0 - p0);
    const auto integrand = [&phi, k](double w) {
      const double log_w = std::log(w);
      return k * std::exp((k - 1.0) * log_w - phi_log_eval(phi, k * log_w));
    };
    acc.add(quad::integrate_adaptive(integrand, 0.0, w_max, settling_rel_tol, 0.0, 20000), "(0, 1]");
    return;
  }
  // Geometric panels toward 0, closed by a geometric-series estimate of the rest.
  double hi = upper;
  double last = 0.0;
  double ratio = 1.0;
  int small_ratio_streak = 0;
  for (int decade = 0; decade < 300; ++decade) {
    const double lo = hi / 10.0;
    const auto r = quad::integrate_adaptive([&phi](double v) { return 1.0 / phi_eval(phi, v); }, lo, hi, settling_rel_tol);
    acc.add(r, "a decade near 0");
    if (decade > 0) {
      ratio = r.value / last;
      small_ratio_streak = ratio < 0.9 ? small_ratio_streak + 1 : 0;
    }
    last = r.value;
    hi = lo;
    if (small_ratio_streak >= 3 && last * ratio / (1.0 - ratio) < 1e-13 * acc.value) {
      const double rest = last * ratio / (1.0 - ratio);
      acc.value += rest;
      acc.error += rest;
      return;
    }
  }
  fail(ErrorCode::quadrature, "settling_bounds", "integral of 1/phi does not converge at 0");
}

// integral over (1, upper] of dV/phi, upper finite.
inline void integrate_tail_finite(const PhiFunction& phi, double upper, Accum& acc) {
  double lo = 1.0;
  while (lo < upper) {
    const double hi = std::min(upper, lo * 10.0);
    acc.add(quad::integrate_adaptive([&phi](double v) { return 1.0 / phi_eval(phi, v); }, lo, hi, settling_rel_tol),
            "a decade above 1");
    lo = hi;
  }
}

// integral over (1, inf) of dV/phi.
inline void integrate_tail_infinite(const PhiFunction& phi, Accum& acc) {
  if (phi.exponent_at_infinity) {
    // V = w^-m with m = 1/(qinf - 1); dV/phi(V) = m w^(-m-1)/phi(w^-m) dw, bounded at w = 0.
    const double m = 1.0 / (*phi.exponent_at_infinity - 1.0);
    const auto integrand = [&phi, m](double w) {
      const double log_w = std::log(w);
      return m * std::exp(-(m + 1.0) * log_w - phi_log_eval(phi, -m * log_w));
    };
    acc.add(quad::integrate_adaptive(integrand, 0.0, 1.0, settling_rel_tol, 0.0, 20000), "(1, inf)");
    return;
  }
  double lo = 1.0;
  double last = 0.0;
  double ratio = 1.0;
  int small_ratio_streak = 0;
  for (int decade = 0; decade < 300; ++decade) {
    const double hi = lo * 10.0;
    const auto r = quad::integrate_adaptive([&phi](double v) { return 1.0 / phi_eval(phi, v); }, lo, hi, settling_rel_tol);
    acc.add(r, "a decade toward infinity");
    if (decade > 0) {
      ratio = r.value / last;
      small_ratio_streak = ratio < 0.9 ? small_ratio_streak + 1 : 0;
    }
    last = r.value;
    lo = hi;
    if (small_ratio_streak >= 3 && last * ratio / (1.0 - ratio) < 1e-13 * acc.value) {
      const double rest = last * ratio / (1.0 - ratio);
      acc.value += rest;
      acc.error += rest;
      return;
    }
  }
  fail(ErrorCode::quadrature, "settling_bounds", "integral of 1/phi does not converge at infinity");
}

}  // namespace detail

/// integral_0^V0 dV / phi(V). V0 may be +infinity when phi is fixed-time
/// admissible.
inline SettlingBound settling_integral(const PhiFunction& phi, double v0) {
  if (std::isnan(v0) || v0 < 0.0) detail::fail(ErrorCode::input, "settling_bounds", "V0 must be nonnegative");
  const auto adm = phi_admissible(phi);
  if (adm.classification == Admissibility::not_admissible) {
    detail::fail(ErrorCode::contract, "settling_bounds", "phi is not finite-time admissible");
  }
  if (std::isinf(v0) && adm.classification != Admissibility::fixed_time) {
    detail::fail(ErrorCode::contract, "settling_bounds", "V0 = inf requires a fixed-time admissible phi");
  }
  SettlingBound out;
  out.kind = BoundKind::quadrature;
  out.formula_id = "phi_integral";
  out.inputs_echo = {{"V0", v0}};
  if (v0 == 0.0) return out;
  detail::Accum acc;
  detail::integrate_head(phi, std::min(1.0, v0), acc);
  if (std::isinf(v0)) {
    detail::integrate_tail_infinite(phi, acc);
  } else if (v0 > 1.0) {
    detail::integrate_tail_finite(phi, v0, acc);
  }
  out.value = acc.value;
  out.achieved_tolerance = acc.value > 0.0 ? acc.error / acc.value : acc.error;
  return out;
}

struct Lemma3Inputs {
  double c = 1.0;
  double alpha = 0.5;
  double v0 = 1.0;
};

struct Theorem4Inputs {
  double lambda0 = 1.0;
  ScaleExponentsEq5 exponents;
};

struct Theorem5Inputs {
  double lambda0 = 1.0;
  PiecewiseScaleParams params;
};

using ClosedFormInputs = std::variant<Lemma3Inputs, PolyakovParams, Theorem4Inputs, Theorem5Inputs>;

namespace detail {

inline void require_bound(bool ok, const std::string& formula, const std::string& hypothesis) {
  if (!ok) fail(ErrorCode::parameter, "settling_bounds", formula + ": hypothesis violated: " + hypothesis);
}

}  // namespace detail

/// Closed-form settling-time upper bounds:
///   lemma3:   V0^(1-alpha) / (c (1-alpha))
///   theorem1: 1/(a(1-p)) + 1/(b(q-1))
///   theorem4: 1/(l0(1-a)) + 1/(l0(b-1)), a = (2-p)/2, b = (2-q)/2
///   theorem5: 2c^(p-2)/((2-alpha) l0 (1-p)) + 2c^(q-2)/((2-beta) l0 (q-1))
inline SettlingBound closed_form_bound(const ClosedFormInputs& inputs) {
  SettlingBound out;
  out.kind = BoundKind::closed_form;
  std::visit(
      [&out](const auto& in) {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, Lemma3Inputs>) {
          out.formula_id = "lemma3";
          detail::require_bound(in.c > 0.0, "lemma3", "c > 0");
          detail::require_bound(in.alpha > 0.0 && in.alpha < 1.0, "lemma3", "0 < alpha < 1");
          detail::require_bound(in.v0 >= 0.0, "lemma3", "V0 >= 0");
          out.value = std::isinf(in.v0) ? INFINITY : std::pow(in.v0, 1.0 - in.alpha) / (in.c * (1.0 - in.alpha));
          out.inputs_echo = {{"c", in.c}, {"alpha", in.alpha}, {"V0", in.v0}};
        } else if constexpr (std::is_same_v<T, PolyakovParams>) {
          out.formula_id = "theorem1";
          detail::require_bound(in.a > 0.0 && in.b > 0.0, "theorem1", "a, b > 0");
          detail::require_bound(in.p > 0.0 && in.p < 1.0, "theorem1", "0 < p < 1");
          detail::require_bound(in.q > 1.0, "theorem1", "q > 1");
          out.value = 1.0 / (in.a * (1.0 - in.p)) + 1.0 / (in.b * (in.q - 1.0));
          out.inputs_echo = {{"a", in.a}, {"b", in.b}, {"p", in.p}, {"q", in.q}};
        } else if constexpr (std::is_same_v<T, Theorem4Inputs>) {
          out.formula_id = "theorem4";
          detail::require_bound(in.lambda0 > 0.0, "theorem4", "lambda0 > 0");
          detail::require_bound(in.exponents.p > 0.0 && in.exponents.p < 1.0, "theorem4", "0 < p < 1");
          detail::require_bound(in.exponents.q < 0.0, "theorem4", "q < 0");
          const double a = (2.0 - in.exponents.p) / 2.0;
          const double b = (2.0 - in.exponents.q) / 2.0;
          out.value = 1.0 / (in.lambda0 * (1.0 - a)) + 1.0 / (in.lambda0 * (b - 1.0));
          out.inputs_echo = {{"lambda0", in.lambda0}, {"p", in.exponents.p}, {"q", in.exponents.q}};
        } else {
          out.formula_id = "theorem5";
          detail::require_bound(in.lambda0 > 0.0, "theorem5", "lambda0 > 0");
          detail::require_bound(in.params.alpha > 0.0 && in.params.alpha < 1.0, "theorem5", "0 < alpha < 1");
          detail::require_bound(in.params.beta < 0.0, "theorem5", "beta < 0");
          const auto& pr = in.params;
          out.value = 2.0 * std::pow(pr.c, pr.p - 2.0) / ((2.0 - pr.alpha) * in.lambda0 * (1.0 - pr.p)) +
                      2.0 * std::pow(pr.c, pr.q - 2.0) / ((2.0 - pr.beta) * in.lambda0 * (pr.q - 1.0));
          out.inputs_echo = {{"lambda0", in.lambda0}, {"alpha", pr.alpha}, {"beta", pr.beta},
                             {"c", pr.c},             {"p", pr.p},         {"q", pr.q}};
        }
      },
      inputs);
  return out;
}

}  // namespace fxts
