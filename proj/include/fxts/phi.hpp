#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fxts/error.hpp"
#include "fxts/scaling.hpp"
#include "fxts/spec_string.hpp"

namespace fxts {

/// a V^p + b V^q with a, b > 0, 0 < p < 1 < q.
struct PolyakovParams {
  double a = 1.0;
  double b = 1.0;
  double p = 0.5;
  double q = 2.0;

  bool operator==(const PolyakovParams&) const = default;
};

struct PowerPhi {
  double a = 1.0;
  double p = 0.5;
  bool operator==(const PowerPhi&) const = default;
};

struct PolyakovPhi {
  PolyakovParams params;
  bool operator==(const PolyakovPhi&) const = default;
};

/// (c^(2-p)/2)(2-alpha) lambda0 r^p for r <= 1,
/// (c^(2-q)/2)(2-beta) lambda0 r^q for r > 1.
struct PiecewisePhi {
  PiecewiseScaleParams params;
  double lambda0 = 1.0;
  bool operator==(const PiecewisePhi&) const = default;
};

/// Sampled phi; interpolated as a power law between samples (log-log linear)
/// and extrapolated with the end segments' exponents.
struct TablePhi {
  std::vector<double> r;
  std::vector<double> value;
  bool operator==(const TablePhi&) const = default;
};

struct PhiFunction {
  std::variant<PowerPhi, PolyakovPhi, PiecewisePhi, TablePhi> variant;
  // Local power-law exponents phi ~ r^p0 as r -> 0 and phi ~ r^qinf as r -> inf.
  std::optional<double> endpoint_exponent_at_zero;
  std::optional<double> exponent_at_infinity;

  bool operator==(const PhiFunction&) const = default;
};

inline void validate(const PolyakovParams& pp) {
  if (!(pp.a > 0.0)) detail::fail(ErrorCode::parameter, "settling_bounds", "polyakov requires a > 0");
  if (!(pp.b > 0.0)) detail::fail(ErrorCode::parameter, "settling_bounds", "polyakov requires b > 0");
  if (!(pp.p > 0.0 && pp.p < 1.0)) detail::fail(ErrorCode::parameter, "settling_bounds", "polyakov requires 0 < p < 1");
  if (!(pp.q > 1.0) || !std::isfinite(pp.q)) detail::fail(ErrorCode::parameter, "settling_bounds", "polyakov requires q > 1");
}

inline PhiFunction make_power_phi(double a, double p) {
  if (!(a > 0.0) || !std::isfinite(a)) detail::fail(ErrorCode::parameter, "settling_bounds", "power phi requires a > 0");
  if (!(p > 0.0 && p < 1.0)) detail::fail(ErrorCode::parameter, "settling_bounds", "power phi requires 0 < p < 1");
  return PhiFunction{PowerPhi{a, p}, p, p};
}

inline PhiFunction make_polyakov_phi(const PolyakovParams& pp) {
  validate(pp);
  return PhiFunction{PolyakovPhi{pp}, pp.p, pp.q};
}

inline PhiFunction make_piecewise_phi(const PiecewiseScaleParams& params, double lambda0) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) {
    detail::fail(ErrorCode::parameter, "settling_bounds", "piecewise phi requires lambda0 > 0");
  }
  return PhiFunction{PiecewisePhi{params, lambda0}, params.p, params.q};
}

inline PhiFunction make_table_phi(std::vector<double> r, std::vector<double> value,
                                  std::optional<double> p0 = std::nullopt, std::optional<double> qinf = std::nullopt) {
  if (r.size() != value.size() || r.size() < 2) {
    detail::fail(ErrorCode::input, "settling_bounds", "table phi needs at least two (r, phi) pairs of equal length");
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0) || !std::isfinite(r[i]) || !std::isfinite(value[i])) {
      detail::fail(ErrorCode::input, "settling_bounds", "table phi sample abscissae must be positive and finite");
    }
    if (i > 0 && !(r[i] > r[i - 1])) {
      detail::fail(ErrorCode::input, "settling_bounds", "table phi abscissae must be strictly increasing");
    }
  }
  return PhiFunction{TablePhi{std::move(r), std::move(value)}, p0, qinf};
}

namespace detail {

inline double table_eval(const TablePhi& t, double r) {
  const bool positive = std::all_of(t.value.begin(), t.value.end(), [](double v) { return v > 0.0; });
  const std::size_t n = t.r.size();
  std::size_t i = 0;  // segment [i, i+1]
  if (r <= t.r.front()) {
    i = 0;
  } else if (r >= t.r.back()) {
    i = n - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(t.r.begin(), t.r.end(), r) - t.r.begin()) - 1;
  }
  if (positive) {
    const double slope = std::log(t.value[i + 1] / t.value[i]) / std::log(t.r[i + 1] / t.r[i]);
    return t.value[i] * std::pow(r / t.r[i], slope);
  }
  if (r <= t.r.front()) return t.value.front() * (r / t.r.front());
  const double slope = (t.value[i + 1] - t.value[i]) / (t.r[i + 1] - t.r[i]);
  return t.value[i] + slope * (r - t.r[i]);
}

inline double table_log_eval(const TablePhi& t, double log_r) {
  const std::size_t n = t.r.size();
  const bool positive = std::all_of(t.value.begin(), t.value.end(), [](double v) { return v > 0.0; });
  if (!positive) return std::log(table_eval(t, std::exp(log_r)));
  const double lr0 = std::log(t.r.front());
  const double lrn = std::log(t.r.back());
  std::size_t i = 0;
  if (log_r <= lr0) {
    i = 0;
  } else if (log_r >= lrn) {
    i = n - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(t.r.begin(), t.r.end(), std::exp(log_r)) - t.r.begin()) - 1;
    i = std::min(i, n - 2);
  }
  const double slope = std::log(t.value[i + 1] / t.value[i]) / std::log(t.r[i + 1] / t.r[i]);
  return std::log(t.value[i]) + slope * (log_r - std::log(t.r[i]));
}

// log(exp(x) + exp(y)) without overflow.
inline double log_add(double x, double y) {
  const double hi = std::max(x, y);
  if (std::isinf(hi) && hi < 0) return hi;
  return hi + std::log1p(std::exp(std::min(x, y) - hi));
}

inline double piecewise_branch_coeff(const PiecewisePhi& pw, bool lower) {
  const auto& pr = pw.params;
  return lower ? 0.5 * std::pow(pr.c, 2.0 - pr.p) * (2.0 - pr.alpha) * pw.lambda0
               : 0.5 * std::pow(pr.c, 2.0 - pr.q) * (2.0 - pr.beta) * pw.lambda0;
}

}  // namespace detail

/// phi(r) for r >= 0; exactly 0 at r = 0.
inline double phi_eval(const PhiFunction& phi, double r) {
  if (!(r >= 0.0)) detail::fail(ErrorCode::input, "settling_bounds", "phi evaluated at negative or NaN argument");
  if (r == 0.0) return 0.0;
  return std::visit(
      [r](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PowerPhi>) {
          return v.a * std::pow(r, v.p);
        } else if constexpr (std::is_same_v<T, PolyakovPhi>) {
          return v.params.a * std::pow(r, v.params.p) + v.params.b * std::pow(r, v.params.q);
        } else if constexpr (std::is_same_v<T, PiecewisePhi>) {
          const bool lower = r <= 1.0;
          return detail::piecewise_branch_coeff(v, lower) * std::pow(r, lower ? v.params.p : v.params.q);
        } else {
          return detail::table_eval(v, r);
        }
      },
      phi.variant);
}

/// log phi(exp(log_r)), finite for arguments whose phi would over- or
/// underflow in double precision.
inline double phi_log_eval(const PhiFunction& phi, double log_r) {
  return std::visit(
      [log_r](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PowerPhi>) {
          return std::log(v.a) + v.p * log_r;
        } else if constexpr (std::is_same_v<T, PolyakovPhi>) {
          return detail::log_add(std::log(v.params.a) + v.params.p * log_r, std::log(v.params.b) + v.params.q * log_r);
        } else if constexpr (std::is_same_v<T, PiecewisePhi>) {
          const bool lower = log_r <= 0.0;
          return std::log(detail::piecewise_branch_coeff(v, lower)) + (lower ? v.params.p : v.params.q) * log_r;
        } else {
          return detail::table_log_eval(v, log_r);
        }
      },
      phi.variant);
}

/// Parses `power:a=,p=`, `polyakov:a=,b=,p=,q=`,
/// `theorem5:alpha=,beta=,lambda0=` or `table:<r>=<phi>,...[,p0=,qinf=]`.
inline PhiFunction parse_phi(const SpecString& spec) {
  auto only = [&spec](std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : spec.params) {
      bool ok = false;
      for (auto key : keys) ok = ok || k == key;
      if (!ok) detail::fail(ErrorCode::input, "settling_bounds", spec.name + ": unknown parameter '" + k + "'");
    }
  };
  if (spec.name == "power") {
    only({"a", "p", "c", "alpha"});
    const double a = spec.has("c") ? spec.get_double("c") : spec.get_double("a", 1.0);
    const double p = spec.has("alpha") ? spec.get_double("alpha") : spec.get_double("p", 0.5);
    return make_power_phi(a, p);
  }
  if (spec.name == "polyakov") {
    only({"a", "b", "p", "q"});
    return make_polyakov_phi({spec.get_double("a", 1.0), spec.get_double("b", 1.0), spec.get_double("p", 0.5),
                              spec.get_double("q", 2.0)});
  }
  if (spec.name == "theorem5") {
    only({"alpha", "beta", "lambda0"});
    return make_piecewise_phi(compute_c_and_exponents(spec.get_double("alpha", 0.5), spec.get_double("beta", -2.0)),
                              spec.get_double("lambda0", 1.0));
  }
  if (spec.name == "table") {
    std::vector<std::pair<double, double>> pts;
    std::optional<double> p0;
    std::optional<double> qinf;
    for (const auto& [k, v] : spec.params) {
      if (k == "p0") {
        p0 = parse_double(v, "p0");
      } else if (k == "qinf") {
        qinf = parse_double(v, "qinf");
      } else {
        pts.emplace_back(parse_double(k, "table abscissa"), parse_double(v, "table value"));
      }
    }
    std::vector<double> r;
    std::vector<double> val;
    for (const auto& [x, y] : pts) {
      r.push_back(x);
      val.push_back(y);
    }
    return make_table_phi(std::move(r), std::move(val), p0, qinf);
  }
  detail::fail(ErrorCode::input, "settling_bounds", "unknown phi '" + spec.name + "'");
}

inline PhiFunction parse_phi(std::string_view text) { return parse_phi(parse_spec(text)); }

}  // namespace fxts
