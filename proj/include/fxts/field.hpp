#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "fxts/error.hpp"
#include "fxts/quadrature.hpp"

namespace fxts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using Evaluator = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;
using PotentialFn = std::function<double(const Vector&)>;

struct AnalyticJacobian {
  JacobianFn fn;
};

/// Central differences with absolute step `step`. Without one the step is
/// 1e-6 * max(1, |x|).
struct FiniteDifference {
  std::optional<double> step;
};

using JacobianMode = std::variant<AnalyticJacobian, FiniteDifference>;

inline constexpr double default_equilibrium_tolerance = 1e-12;

/// An autonomous vector field x' = f(x) on R^n with f(0) = 0.
struct VectorFieldSpec {
  std::size_t dimension = 0;
  Evaluator evaluator;
  JacobianMode jacobian_mode = FiniteDifference{};
  bool gradient_field = false;
  PotentialFn closed_form_potential;  // empty when unknown
  double equilibrium_tolerance = default_equilibrium_tolerance;
  // Declared property f(x) = 0 <=> x = 0.
  bool zero_only_at_origin = false;
};

namespace detail {

inline void check_dimension(const VectorFieldSpec& field, const Vector& x, const char* module) {
  if (static_cast<std::size_t>(x.size()) != field.dimension) {
    fail(ErrorCode::input, module,
         "state has dimension " + std::to_string(x.size()) + ", field expects " + std::to_string(field.dimension));
  }
}

}  // namespace detail

/// f(x), exactly zero inside the equilibrium ball.
inline Vector evaluate(const VectorFieldSpec& field, const Vector& x) {
  detail::check_dimension(field, x, "field_core");
  if (x.norm() <= field.equilibrium_tolerance) return Vector::Zero(x.size());
  return field.evaluator(x);
}

inline double default_fd_step(const Vector& x) { return 1e-6 * std::max(1.0, x.norm()); }

/// Jacobian df/dx; column j holds the partial derivatives with respect to x_j.
inline Matrix jacobian(const VectorFieldSpec& field, const Vector& x) {
  detail::check_dimension(field, x, "field_core");
  Matrix jac;
  if (const auto* analytic = std::get_if<AnalyticJacobian>(&field.jacobian_mode)) {
    jac = analytic->fn(x);
  } else {
    const auto& fd = std::get<FiniteDifference>(field.jacobian_mode);
    detail::require(x.norm() > field.equilibrium_tolerance, ErrorCode::contract, "field_core",
                    "finite-difference Jacobian requested inside the equilibrium ball");
    const double h = fd.step ? *fd.step : default_fd_step(x);
    const auto n = static_cast<Eigen::Index>(field.dimension);
    jac.resize(n, n);
    Vector xp = x;
    Vector xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      jac.col(j) = (evaluate(field, xp) - evaluate(field, xm)) / (xp(j) - xm(j));
      xp(j) = x(j);
      xm(j) = x(j);
    }
  }
  if (!jac.allFinite()) detail::fail(ErrorCode::numeric, "field_core", "Jacobian has non-finite entries");
  return jac;
}

enum class PotentialPath { straight_line, axis_aligned };

struct PotentialQuadrature {
  std::size_t order = 16;
  std::size_t panels = 64;
};

namespace detail {

inline const quad::GaussLegendreRule& rule_for(std::size_t order, quad::GaussLegendreRule& scratch) {
  static const quad::GaussLegendreRule gl16 = quad::gauss_legendre(16);
  if (order == 16) return gl16;
  scratch = quad::gauss_legendre(order);
  return scratch;
}

}  // namespace detail

/// -integral_0^x f(y)^T dy along the chosen path. No gradient-field check, so
/// it can also expose path dependence of non-gradient fields.
inline double line_integral(const VectorFieldSpec& field, const Vector& x, PotentialPath path,
                            const PotentialQuadrature& cfg = {}) {
  detail::check_dimension(field, x, "field_core");
  quad::GaussLegendreRule scratch;
  const auto& rule = detail::rule_for(cfg.order, scratch);
  if (path == PotentialPath::straight_line) {
    // y = t x, dy = x dt
    const auto integrand = [&](double t) -> double { return evaluate(field, Vector(t * x)).dot(x); };
    return -quad::composite_gauss(integrand, 0.0, 1.0, rule, cfg.panels);
  }
  double total = 0.0;
  Vector y = Vector::Zero(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x(k) != 0.0) {
      const auto integrand = [&, k](double s) -> double {
        Vector z = y;
        z(k) = s;
        return evaluate(field, z)(k);
      };
      total -= quad::composite_gauss(integrand, 0.0, x(k), rule, cfg.panels);
    }
    y(k) = x(k);
  }
  return total;
}

/// V(x) = -integral_0^x f(y)^T dy for gradient fields.
inline double potential(const VectorFieldSpec& field, const Vector& x,
                        PotentialPath path = PotentialPath::straight_line, const PotentialQuadrature& cfg = {}) {
  detail::require(field.gradient_field, ErrorCode::contract, "field_core",
                  "potential requested for a field not declared as a gradient field");
  return line_integral(field, x, path, cfg);
}

}  // namespace fxts
