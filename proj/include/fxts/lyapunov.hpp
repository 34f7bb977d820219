#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fxts/field.hpp"
#include "fxts/parallel.hpp"
#include "fxts/phi.hpp"
#include "fxts/scaling.hpp"
#include "fxts/settling.hpp"

namespace fxts {

/// theorem4: H = -(J + J^T); theorem5: H = -(J + J^T)/2.
enum class HConvention { theorem4, theorem5 };

inline std::string to_string(HConvention c) { return c == HConvention::theorem4 ? "theorem4" : "theorem5"; }

struct Ball {
  double radius = 1.0;
};

struct Annulus {
  double r_min = 1e-3;
  double r_max = 1e3;
};

/// Deterministic sample set: `count` pseudo-random points plus a log-radial
/// grid of `grid_radii` radii along every signed coordinate axis. The
/// equilibrium ball is always excluded.
struct SamplingPlan {
  std::variant<Ball, Annulus> domain = Annulus{};
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::size_t grid_radii = 16;
};

inline std::vector<Vector> generate_samples(const SamplingPlan& plan, std::size_t dim, double equilibrium_tolerance) {
  const auto n = static_cast<Eigen::Index>(dim);
  double lo = 0.0;
  double hi = 0.0;
  bool log_radius = false;
  if (const auto* ball = std::get_if<Ball>(&plan.domain)) {
    detail::require(ball->radius > equilibrium_tolerance, ErrorCode::parameter, "lyapunov_verify",
                    "sampling ball radius must exceed the equilibrium tolerance");
    lo = ball->radius * 1e-3;
    hi = ball->radius;
  } else {
    const auto& ann = std::get<Annulus>(plan.domain);
    detail::require(ann.r_min > 0.0 && ann.r_max >= ann.r_min, ErrorCode::parameter, "lyapunov_verify",
                    "annulus requires 0 < r_min <= r_max");
    lo = std::max(ann.r_min, 2.0 * equilibrium_tolerance);
    hi = ann.r_max;
    log_radius = true;
  }

  std::mt19937_64 rng(plan.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(plan.count + plan.grid_radii * 2 * dim);
  while (out.size() < plan.count) {
    Vector dir(n);
    for (Eigen::Index i = 0; i < n; ++i) dir(i) = gauss(rng);
    const double nd = dir.norm();
    if (nd == 0.0) continue;
    dir /= nd;
    double r = 0.0;
    if (log_radius) {
      r = lo * std::pow(hi / lo, unit(rng));
    } else {
      r = hi * std::pow(unit(rng), 1.0 / static_cast<double>(dim));  // uniform in volume
    }
    if (r <= equilibrium_tolerance) continue;
    out.emplace_back(r * dir);
  }
  for (std::size_t k = 0; k < plan.grid_radii; ++k) {
    const double t = plan.grid_radii == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(plan.grid_radii - 1);
    const double r = lo * std::pow(hi / lo, t);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (double sign : {1.0, -1.0}) {
        Vector x = Vector::Zero(n);
        x(i) = sign * r;
        out.push_back(std::move(x));
      }
    }
  }
  return out;
}

/// Symmetrized negative Jacobian; exactly symmetric by construction.
inline Matrix h_matrix(const VectorFieldSpec& field, const Vector& x, HConvention conv) {
  detail::require(x.norm() > field.equilibrium_tolerance, ErrorCode::contract, "lyapunov_verify",
                  "H(x) requested inside the equilibrium ball");
  const Matrix j = jacobian(field, x);
  const double scale = conv == HConvention::theorem4 ? 1.0 : 0.5;
  Matrix h = -scale * (j + j.transpose());
  // Symmetrize explicitly so that rounding in the sum cannot break symmetry.
  return 0.5 * (h + h.transpose());
}

enum class Verdict { condition_i_holds, condition_ii_holds, neither };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::condition_i_holds: return "condition_i_holds";
    case Verdict::condition_ii_holds: return "condition_ii_holds";
    case Verdict::neither: return "neither";
  }
  return "unknown";
}

/// Sampled evidence for the eigenvalue conditions on H; never a proof.
struct SpectralReport {
  std::string condition;  // "i" or "ii"
  HConvention convention = HConvention::theorem4;
  double threshold = 0.0;
  double lambda0_estimate = INFINITY;
  Vector worst_point;
  std::vector<int> zero_multiplicity;  // per sample, condition (ii) only
  double orthogonality_residual_max = 0.0;
  double min_eigenvalue = INFINITY;
  Verdict verdict = Verdict::neither;
  std::size_t sample_count = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Matrix> eigensolve(const Matrix& h, const Vector& x, bool vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    std::string where;
    for (Eigen::Index i = 0; i < x.size(); ++i) where += (i ? "," : "") + format_double(x(i));
    fail(ErrorCode::numeric, "lyapunov_verify", "symmetric eigensolver failed at x = (" + where + ")");
  }
  return es;
}

}  // namespace detail

inline SpectralReport verify_condition_i(const VectorFieldSpec& field, const std::vector<Vector>& samples,
                                         HConvention conv, double threshold) {
  const auto mins = parallel_map<double>(samples.size(), [&](std::size_t i) {
    const Matrix h = h_matrix(field, samples[i], conv);
    return detail::eigensolve(h, samples[i], false).eigenvalues()(0);
  });
  SpectralReport rep;
  rep.condition = "i";
  rep.convention = conv;
  rep.threshold = threshold;
  rep.sample_count = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (mins[i] < rep.lambda0_estimate) {
      rep.lambda0_estimate = mins[i];
      rep.worst_point = samples[i];
    }
  }
  rep.min_eigenvalue = rep.lambda0_estimate;
  rep.verdict = rep.lambda0_estimate >= threshold ? Verdict::condition_i_holds : Verdict::neither;
  return rep;
}

/// H(x) positive definite with min eigenvalue >= threshold at every sample.
inline SpectralReport verify_condition_i(const VectorFieldSpec& field, const SamplingPlan& plan, HConvention conv,
                                         double threshold = 1e-6) {
  return verify_condition_i(field, generate_samples(plan, field.dimension, field.equilibrium_tolerance), conv,
                            threshold);
}

inline SpectralReport verify_condition_ii(const VectorFieldSpec& field, const std::vector<Vector>& samples,
                                          HConvention conv, double threshold, double zero_tol) {
  struct PerSample {
    double min_eig = 0.0;
    double lambda2 = 0.0;
    int multiplicity = 0;
    double residual = 0.0;
    bool f_vanishes = false;
  };
  const auto per = parallel_map<PerSample>(samples.size(), [&](std::size_t i) {
    const Vector& x = samples[i];
    const Matrix h = h_matrix(field, x, conv);
    const auto es = detail::eigensolve(h, x, true);
    const auto& ev = es.eigenvalues();
    PerSample s;
    s.min_eig = ev(0);
    s.lambda2 = 0.0;
    bool found_positive = false;
    Matrix zero_space(h.rows(), 0);
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      if (std::abs(ev(k)) <= zero_tol) {
        ++s.multiplicity;
        zero_space.conservativeResize(Eigen::NoChange, zero_space.cols() + 1);
        zero_space.col(zero_space.cols() - 1) = es.eigenvectors().col(k);
      } else if (ev(k) > zero_tol && !found_positive) {
        s.lambda2 = ev(k);
        found_positive = true;
      }
    }
    const Vector f = evaluate(field, x);
    const double nf = f.norm();
    if (nf <= field.equilibrium_tolerance) {
      s.f_vanishes = true;
    } else if (zero_space.cols() > 0) {
      s.residual = (zero_space * (zero_space.transpose() * f)).norm() / nf;
    }
    return s;
  });

  SpectralReport rep;
  rep.condition = "ii";
  rep.convention = conv;
  rep.threshold = threshold;
  rep.sample_count = samples.size();
  bool constant_multiplicity = true;
  bool vanishing_reported = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = per[i];
    rep.zero_multiplicity.push_back(s.multiplicity);
    if (s.multiplicity != per.front().multiplicity) constant_multiplicity = false;
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, s.min_eig);
    rep.orthogonality_residual_max = std::max(rep.orthogonality_residual_max, s.residual);
    if (s.lambda2 < rep.lambda0_estimate) {
      rep.lambda0_estimate = s.lambda2;
      rep.worst_point = samples[i];
    }
    if (s.f_vanishes && !vanishing_reported) {
      vanishing_reported = true;
      std::string where;
      for (Eigen::Index k = 0; k < samples[i].size(); ++k) where += (k ? "," : "") + format_double(samples[i](k));
      rep.warnings.push_back("contract: base field vanishes at x = (" + where +
                             ") != 0, violating f(x) = 0 <=> x = 0");
    }
  }
  if (!field.zero_only_at_origin) {
    rep.warnings.push_back("contract: base field is not declared to satisfy f(x) = 0 <=> x = 0");
  }
  const bool holds = !samples.empty() && constant_multiplicity && rep.min_eigenvalue >= -zero_tol &&
                     rep.orthogonality_residual_max < zero_tol && rep.lambda0_estimate >= threshold;
  rep.verdict = holds ? Verdict::condition_ii_holds : Verdict::neither;
  return rep;
}

/// H(x) positive semidefinite with constant zero multiplicity, f orthogonal
/// to the zero eigenspace, and the smallest eigenvalue above the zero band
/// at least `threshold`.
inline SpectralReport verify_condition_ii(const VectorFieldSpec& field, const SamplingPlan& plan, HConvention conv,
                                          double threshold = 1e-6, double zero_tol = 1e-8) {
  return verify_condition_ii(field, generate_samples(plan, field.dimension, field.equilibrium_tolerance), conv,
                             threshold, zero_tol);
}

/// V = |f|^2 of the base field, or V = -integral_0^x f^T dy (gradient fields).
enum class VSelector { norm_sq_of_f, potential };

inline std::string to_string(VSelector v) { return v == VSelector::norm_sq_of_f ? "normsq" : "potential"; }

inline double v_value(const VectorFieldSpec& base, VSelector selector, const Vector& x) {
  if (selector == VSelector::norm_sq_of_f) return evaluate(base, x).squaredNorm();
  return potential(base, x);
}

/// grad(|f|^2) = 2 J^T f;  grad(potential) = -f.
inline Vector v_gradient(const VectorFieldSpec& base, VSelector selector, const Vector& x) {
  if (selector == VSelector::potential) {
    detail::require(base.gradient_field, ErrorCode::contract, "lyapunov_verify",
                    "V = potential requires a gradient-field base");
    return -evaluate(base, x);
  }
  const Vector f = evaluate(base, x);
  if (f.norm() == 0.0) return Vector::Zero(x.size());
  return 2.0 * jacobian(base, x).transpose() * f;
}

/// L_g V(x) = grad V(x) . g(x), V built from the base field and g the
/// (possibly scaled) right-hand side.
inline double lie_derivative(const ScaledSystem& system, VSelector selector, const Vector& x) {
  const Vector g = evaluate(system.field, x);
  if (g.norm() == 0.0) return 0.0;
  return v_gradient(system.base, selector, x).dot(g);
}

inline double lie_derivative(const VectorFieldSpec& field, VSelector selector, const Vector& x) {
  return lie_derivative(unscaled(field), selector, x);
}

/// Margins are relative: (lhs - rhs) / max(1, |phi|) so that one tolerance
/// serves samples whose values span many orders of magnitude.
struct DecreaseReport {
  bool holds = false;
  double tol = 0.0;
  double worst_margin = INFINITY;
  Vector worst_point;
  std::size_t failing_count = 0;
  std::vector<Vector> failing_points;  // first few, in sample order
  std::size_t sample_count = 0;
  std::size_t skipped_count = 0;
  std::vector<double> margins;  // per sample; NaN for skipped samples
};

namespace detail {

inline constexpr std::size_t max_reported_failures = 16;

inline DecreaseReport aggregate(const std::vector<Vector>& samples, std::vector<double> margins, double tol) {
  DecreaseReport rep;
  rep.tol = tol;
  rep.sample_count = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double m = margins[i];
    if (std::isnan(m)) {
      ++rep.skipped_count;
      continue;
    }
    if (m < rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_point = samples[i];
    }
    if (m < -tol) {
      ++rep.failing_count;
      if (rep.failing_points.size() < max_reported_failures) rep.failing_points.push_back(samples[i]);
    }
  }
  rep.holds = rep.failing_count == 0 && rep.skipped_count < rep.sample_count;
  rep.margins = std::move(margins);
  return rep;
}

inline void require_admissible(const PhiFunction& phi) {
  if (phi_admissible(phi).classification == Admissibility::not_admissible) {
    fail(ErrorCode::contract, "lyapunov_verify", "phi is not admissible (sign, monotonicity or integrability fails)");
  }
}

}  // namespace detail

/// First-order check: L_g V(x) <= -phi(V(x)) + tol at every sample.
inline DecreaseReport verify_phi_decrease(const ScaledSystem& system, VSelector selector, const PhiFunction& phi,
                                          const std::vector<Vector>& samples, double tol) {
  detail::require_admissible(phi);
  auto margins = parallel_map<double>(samples.size(), [&](std::size_t i) {
    const double v = v_value(system.base, selector, samples[i]);
    const double vdot = lie_derivative(system, selector, samples[i]);
    const double ph = phi_eval(phi, std::max(0.0, v));
    return (-ph - vdot) / std::max(1.0, ph);
  });
  return detail::aggregate(samples, std::move(margins), tol);
}

inline DecreaseReport verify_phi_decrease(const ScaledSystem& system, VSelector selector, const PhiFunction& phi,
                                          const SamplingPlan& plan, double tol) {
  return verify_phi_decrease(
      system, selector, phi, generate_samples(plan, system.field.dimension, system.field.equilibrium_tolerance), tol);
}

/// Second-order check along the flow: the forward difference
/// (Vdot(x + delta g(x)) - Vdot(x)) / delta must be >= phi(-Vdot(x)) - tol.
/// Samples whose probe segment x -> x + delta g enters the ball of radius
/// |x|/2 around the origin are skipped and counted.
inline DecreaseReport verify_second_order(const ScaledSystem& system, VSelector selector, const PhiFunction& phi,
                                          const std::vector<Vector>& samples, double delta, double tol) {
  detail::require(delta > 0.0, ErrorCode::parameter, "lyapunov_verify", "flow step delta must be positive");
  auto margins = parallel_map<double>(samples.size(), [&](std::size_t i) {
    const Vector& x = samples[i];
    const Vector step = delta * evaluate(system.field, x);
    // Closest approach of the segment x + s*step, s in [0, 1], to the origin.
    const double ss = step.squaredNorm();
    const double s = ss > 0.0 ? std::clamp(-x.dot(step) / ss, 0.0, 1.0) : 0.0;
    if ((x + s * step).norm() < 0.5 * x.norm()) return std::numeric_limits<double>::quiet_NaN();
    const double vdot = lie_derivative(system, selector, x);
    const double vdot_next = lie_derivative(system, selector, Vector(x + step));
    const double flow_rate = (vdot_next - vdot) / delta;
    const double r = -vdot;
    if (r < 0.0) return r / std::max(1.0, std::abs(r));  // V increasing: not a decrease at all
    const double ph = phi_eval(phi, r);
    return (flow_rate - ph) / std::max(1.0, ph);
  });
  return detail::aggregate(samples, std::move(margins), tol);
}

inline DecreaseReport verify_second_order(const ScaledSystem& system, VSelector selector, const PhiFunction& phi,
                                          const SamplingPlan& plan, double delta, double tol) {
  return verify_second_order(system, selector, phi,
                             generate_samples(plan, system.field.dimension, system.field.equilibrium_tolerance), delta,
                             tol);
}

}  // namespace fxts
