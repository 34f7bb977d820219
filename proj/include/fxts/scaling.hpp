#pragma once

#include <cmath>
#include <string>
#include <variant>

#include "fxts/field.hpp"
#include "fxts/spec_string.hpp"

namespace fxts {

/// Exponents of the two-term norm scaling (|f|^-p + |f|^-q) f.
struct ScaleExponentsEq5 {
  double p = 0.5;  // in (0, 1)
  double q = -2.0; // < 0

  bool operator==(const ScaleExponentsEq5&) const = default;
};

/// Parameters of the piecewise scaling c f / |f|^alpha (|f| <= 1),
/// c f / |f|^beta (|f| > 1). p, q and c are derived from alpha, beta.
struct PiecewiseScaleParams {
  double alpha = 0.5;
  double beta = -2.0;
  double c = 1.0;
  double p = 0.0;  // (2 - 2 alpha) / (2 - alpha), in (0, 1)
  double q = 0.0;  // (2 - 2 beta) / (2 - beta), in (1, 2)

  bool operator==(const PiecewiseScaleParams&) const = default;
};

enum class ScaleKind { none, eq5, eq6_piecewise };

inline std::string to_string(ScaleKind kind) {
  switch (kind) {
    case ScaleKind::none: return "unscaled";
    case ScaleKind::eq5: return "eq5";
    case ScaleKind::eq6_piecewise: return "eq6";
  }
  return "unknown";
}

/// A base field together with a scaling of it; `field` is the scaled
/// right-hand side (equal to `base` for ScaleKind::none).
struct ScaledSystem {
  VectorFieldSpec base;
  ScaleKind kind = ScaleKind::none;
  std::variant<std::monostate, ScaleExponentsEq5, PiecewiseScaleParams> params;
  VectorFieldSpec field;
};

// Below this |f| the scaled value is taken as the continuous extension 0.
inline constexpr double scaling_floor = 1e-300;

inline void validate(const ScaleExponentsEq5& e) {
  if (!(e.p > 0.0 && e.p < 1.0)) detail::fail(ErrorCode::parameter, "scaling", "eq5 requires 0 < p < 1, got p = " + format_double(e.p));
  if (!(e.q < 0.0) || !std::isfinite(e.q)) detail::fail(ErrorCode::parameter, "scaling", "eq5 requires q < 0, got q = " + format_double(e.q));
}

/// Derived exponents and the constant c that makes the second-order
/// comparison function continuous at r = 1:
///   c^(2-p) (2-alpha) = c^(2-q) (2-beta)  <=>  c = ((2-beta)/(2-alpha))^(1/(q-p)).
inline PiecewiseScaleParams compute_c_and_exponents(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    detail::fail(ErrorCode::parameter, "scaling", "eq6 requires alpha in (0, 1), got alpha = " + format_double(alpha));
  }
  if (!(beta < 0.0) || !std::isfinite(beta)) {
    detail::fail(ErrorCode::parameter, "scaling", "eq6 requires beta < 0, got beta = " + format_double(beta));
  }
  PiecewiseScaleParams out;
  out.alpha = alpha;
  out.beta = beta;
  out.p = (2.0 - 2.0 * alpha) / (2.0 - alpha);
  out.q = (2.0 - 2.0 * beta) / (2.0 - beta);
  // NOTE: the exponent is 1/(q - p); 1/(p - q) breaks continuity at r = 1.
  out.c = std::pow((2.0 - beta) / (2.0 - alpha), 1.0 / (out.q - out.p));
  return out;
}

inline ScaledSystem unscaled(const VectorFieldSpec& field) {
  return ScaledSystem{field, ScaleKind::none, std::monostate{}, field};
}

namespace detail {

inline void require_isolated_zero(const VectorFieldSpec& field) {
  require(field.zero_only_at_origin, ErrorCode::contract, "scaling",
          "scaling requires a base field with f(x) = 0 only at x = 0");
}

inline VectorFieldSpec scaled_shell(const VectorFieldSpec& base) {
  VectorFieldSpec out;
  out.dimension = base.dimension;
  out.jacobian_mode = FiniteDifference{};
  out.equilibrium_tolerance = base.equilibrium_tolerance;
  out.zero_only_at_origin = base.zero_only_at_origin;
  return out;
}

}  // namespace detail

/// x' = (|f|^-p + |f|^-q) f(x) for x != 0, 0 at x = 0.
inline ScaledSystem fxts_scale(const VectorFieldSpec& field, const ScaleExponentsEq5& params) {
  validate(params);
  detail::require_isolated_zero(field);
  ScaledSystem out{field, ScaleKind::eq5, params, detail::scaled_shell(field)};
  out.field.evaluator = [base = field, params](const Vector& x) -> Vector {
    Vector f = evaluate(base, x);
    const double nf = f.norm();
    if (nf < scaling_floor) return Vector::Zero(x.size());
    return (std::pow(nf, -params.p) + std::pow(nf, -params.q)) * f;
  };
  return out;
}

/// c f/|f|^alpha when |f| <= 1, c f/|f|^beta when |f| > 1, 0 at x = 0.
inline ScaledSystem piecewise_scale(const VectorFieldSpec& field, double alpha, double beta) {
  const auto params = compute_c_and_exponents(alpha, beta);
  detail::require_isolated_zero(field);
  ScaledSystem out{field, ScaleKind::eq6_piecewise, params, detail::scaled_shell(field)};
  out.field.evaluator = [base = field, params](const Vector& x) -> Vector {
    Vector f = evaluate(base, x);
    const double nf = f.norm();
    if (nf < scaling_floor) return Vector::Zero(x.size());
    const double exponent = nf <= 1.0 ? params.alpha : params.beta;
    return (params.c * std::pow(nf, -exponent)) * f;
  };
  return out;
}

/// Applies `eq5:p=<v>,q=<v>`, `eq6:alpha=<v>,beta=<v>` or `none`.
inline ScaledSystem apply_scale(const VectorFieldSpec& field, const SpecString& scale) {
  if (scale.name == "none" || scale.name == "unscaled") return unscaled(field);
  if (scale.name == "eq5") {
    for (const auto& [k, v] : scale.params)
      if (k != "p" && k != "q") detail::fail(ErrorCode::input, "scaling", "eq5: unknown parameter '" + k + "'");
    return fxts_scale(field, {scale.get_double("p", 0.5), scale.get_double("q", -2.0)});
  }
  if (scale.name == "eq6") {
    for (const auto& [k, v] : scale.params)
      if (k != "alpha" && k != "beta") detail::fail(ErrorCode::input, "scaling", "eq6: unknown parameter '" + k + "'");
    return piecewise_scale(field, scale.get_double("alpha", 0.5), scale.get_double("beta", -2.0));
  }
  detail::fail(ErrorCode::input, "scaling", "unknown scale '" + scale.name + "' (expected eq5, eq6 or none)");
}

}  // namespace fxts
