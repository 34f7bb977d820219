#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fxts/field.hpp"
#include "fxts/spec_string.hpp"

namespace fxts {

/// Infimum of the minimum eigenvalue of H under each H convention.
struct KnownConstants {
  double lambda0_theorem4 = 0.0;  // H = -(J + J^T)
  double lambda0_theorem5 = 0.0;  // H = -(J + J^T) / 2
  // Unscaled time for |x| to fall from r to eps, when known in closed form.
  std::function<double(double r, double eps)> unscaled_settling_time;
};

struct CatalogEntry {
  std::string name;
  VectorFieldSpec field;
  std::optional<KnownConstants> known_constants;
  std::string description;
};

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {"linear_contraction", "rotation_contraction", "quadratic_gradient",
                                                 "scalar_cubic", "cubic_gradient"};
  return names;
}

namespace detail {

inline std::size_t dimension_param(const SpecString& spec, double fallback) {
  const double n = spec.get_double("n", fallback);
  if (!(n >= 1.0) || n != std::floor(n) || n > 1e6) {
    fail(ErrorCode::parameter, "field_core", spec.name + ": dimension n must be a positive integer");
  }
  return static_cast<std::size_t>(n);
}

inline void reject_unknown_keys(const SpecString& spec, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : spec.params) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorCode::input, "field_core", spec.name + ": unknown parameter '" + key + "'");
  }
}

inline double log_settling(double r, double eps) { return r > eps ? std::log(r / eps) : 0.0; }

}  // namespace detail

/// Looks up a catalog system from a parsed `name[:key=value,...]` spec.
///
///   linear_contraction[:n=2]      f = -x
///   rotation_contraction[:w=1]    f = (A - I) x, A = w [[0, 1], [-1, 0]]
///   quadratic_gradient[:q=1,4]    f = -diag(q) x
///   scalar_cubic                  f = -x^3 (asymptotically but not exponentially stable)
///   cubic_gradient[:n=2]          f = -x - x^3 componentwise
inline CatalogEntry catalog_get(const SpecString& spec) {
  CatalogEntry entry;
  entry.name = spec.name;
  auto& f = entry.field;
  f.zero_only_at_origin = true;

  if (spec.name == "linear_contraction") {
    detail::reject_unknown_keys(spec, {"n"});
    const auto n = detail::dimension_param(spec, 2);
    f.dimension = n;
    f.evaluator = [](const Vector& x) -> Vector { return -x; };
    f.jacobian_mode = AnalyticJacobian{[n](const Vector&) -> Matrix {
      return -Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    }};
    f.gradient_field = true;
    f.closed_form_potential = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    entry.known_constants = KnownConstants{2.0, 1.0, detail::log_settling};
    entry.description = "f(x) = -x";
  } else if (spec.name == "rotation_contraction") {
    detail::reject_unknown_keys(spec, {"w"});
    const double w = spec.get_double("w", 1.0);
    Matrix a(2, 2);
    a << 0.0, w, -w, 0.0;
    const Matrix m = a - Matrix::Identity(2, 2);
    f.dimension = 2;
    f.evaluator = [m](const Vector& x) -> Vector { return m * x; };
    f.jacobian_mode = AnalyticJacobian{[m](const Vector&) -> Matrix { return m; }};
    // Skew part cancels in H; |x| decays like exp(-t).
    entry.known_constants = KnownConstants{2.0, 1.0, detail::log_settling};
    entry.description = "f(x) = (A - I) x with A skew-symmetric";
  } else if (spec.name == "quadratic_gradient") {
    detail::reject_unknown_keys(spec, {"q"});
    const auto q = spec.has("q") ? spec.get_list("q") : std::vector<double>{1.0, 4.0};
    double qmin = INFINITY;
    for (double v : q) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        detail::fail(ErrorCode::parameter, "field_core", "quadratic_gradient: diagonal entries must be positive");
      }
      qmin = std::min(qmin, v);
    }
    const Vector diag = Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
    f.dimension = q.size();
    f.evaluator = [diag](const Vector& x) -> Vector { return -(diag.array() * x.array()).matrix(); };
    f.jacobian_mode = AnalyticJacobian{[diag](const Vector&) -> Matrix { return Matrix((-diag).asDiagonal()); }};
    f.gradient_field = true;
    f.closed_form_potential = [diag](const Vector& x) { return 0.5 * x.dot((diag.array() * x.array()).matrix()); };
    entry.known_constants = KnownConstants{2.0 * qmin, qmin, {}};
    entry.description = "f(x) = -Q x with Q diagonal positive definite";
  } else if (spec.name == "scalar_cubic") {
    detail::reject_unknown_keys(spec, {});
    f.dimension = 1;
    f.evaluator = [](const Vector& x) -> Vector { return -x.array().cube().matrix(); };
    f.jacobian_mode = AnalyticJacobian{[](const Vector& x) -> Matrix {
      Matrix j(1, 1);
      j(0, 0) = -3.0 * x(0) * x(0);
      return j;
    }};
    f.gradient_field = true;
    f.closed_form_potential = [](const Vector& x) { return 0.25 * std::pow(x(0), 4); };
    // H(x) = 6 x^2 (theorem4): positive away from 0 but with infimum 0.
    entry.known_constants = KnownConstants{0.0, 0.0, {}};
    entry.description = "f(x) = -x^3";
  } else if (spec.name == "cubic_gradient") {
    detail::reject_unknown_keys(spec, {"n"});
    const auto n = detail::dimension_param(spec, 2);
    f.dimension = n;
    f.evaluator = [](const Vector& x) -> Vector { return -(x.array() + x.array().cube()).matrix(); };
    f.jacobian_mode = AnalyticJacobian{[](const Vector& x) -> Matrix {
      return Matrix((-(1.0 + 3.0 * x.array().square())).matrix().asDiagonal());
    }};
    f.gradient_field = true;
    f.closed_form_potential = [](const Vector& x) {
      return 0.5 * x.squaredNorm() + 0.25 * x.array().pow(4).sum();
    };
    entry.known_constants = KnownConstants{2.0, 1.0, {}};
    entry.description = "f(x) = -x - x^3 componentwise";
  } else {
    detail::fail(ErrorCode::lookup, "field_core", "unknown catalog system '" + spec.name + "'");
  }
  return entry;
}

inline CatalogEntry catalog_get(std::string_view text) { return catalog_get(parse_spec(text)); }

}  // namespace fxts
