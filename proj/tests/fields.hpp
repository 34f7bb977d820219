#pragma once

#include "fxts/field.hpp"

namespace fxts::testing {

// f(x) = (-x1, 0): zero on the whole x2 axis.
inline VectorFieldSpec degenerate_field() {
  VectorFieldSpec f;
  f.dimension = 2;
  f.evaluator = [](const Vector& x) -> Vector {
    Vector out(2);
    out << -x(0), 0.0;
    return out;
  };
  f.jacobian_mode = FiniteDifference{};
  f.gradient_field = true;
  f.zero_only_at_origin = false;
  return f;
}

// Nonlinear gradient field with coupled terms.
// F(x) = 0.5 x1^2 + x2^2 + 0.25 x1^2 x2^2, f = -grad F.
inline VectorFieldSpec coupled_gradient() {
  VectorFieldSpec f;
  f.dimension = 2;
  f.evaluator = [](const Vector& x) -> Vector {
    Vector out(2);
    out << -(x(0) + 0.5 * x(0) * x(1) * x(1)), -(2.0 * x(1) + 0.5 * x(0) * x(0) * x(1));
    return out;
  };
  f.jacobian_mode = FiniteDifference{};
  f.gradient_field = true;
  f.closed_form_potential = [](const Vector& x) {
    return 0.5 * x(0) * x(0) + x(1) * x(1) + 0.25 * x(0) * x(0) * x(1) * x(1);
  };
  f.zero_only_at_origin = true;
  return f;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace fxts::testing
