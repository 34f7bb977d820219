#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fxts/sim.hpp"

namespace fxts {

enum class StabilityEvidence { fixed_time, finite_time, asymptotic, inconclusive };

inline std::string to_string(StabilityEvidence e) {
  switch (e) {
    case StabilityEvidence::fixed_time: return "FxTS-evidence";
    case StabilityEvidence::finite_time: return "FTS-evidence";
    case StabilityEvidence::asymptotic: return "AS-evidence";
    case StabilityEvidence::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct ClassifyRules {
  double min_decades = 4.0;          // radius span needed before saturation counts
  double saturation_rel = 1e-2;      // delta <= saturation_rel * max settling time
  double log_fit_r2 = 0.99;          // T against ln r
  std::size_t min_fit_radii = 3;
};

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct Classification {
  StabilityEvidence evidence = StabilityEvidence::inconclusive;
  std::string rule;
  std::size_t settled_cells = 0;
  std::size_t total_cells = 0;
  double radius_decades = 0.0;
  double max_settling_time = 0.0;
  std::optional<double> saturation_delta;
  std::optional<LogFit> log_fit;
};

/// Least squares of y on x.
inline std::optional<LogFit> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  LogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  return fit;
}

/// Classifies a settling profile. Rules, first match wins:
///  1. fixed_time: every cell settled, radii span at least `min_decades`
///     decades, and the saturation delta is at most
///     `saturation_rel` times the largest settling time.
///  2. asymptotic: every cell settled and the worst-direction settling time
///     is fit by a + b ln r with b > 0 and R^2 above `log_fit_r2`
///     (at least `min_fit_radii` distinct positive radii).
///  3. finite_time: every cell settled.
///  4. asymptotic: no cell settled, every cell ran to t_max, and |x| shrank
///     monotonically in every cell.
///  5. inconclusive.
inline Classification classify(const SettlingProfile& prof, const ClassifyRules& rules = {}) {
  Classification out;
  bool all_monotone_unsettled = true;
  std::vector<double> log_r;
  std::vector<double> worst_t;
  double r_lo = INFINITY;
  double r_hi = 0.0;
  for (std::size_t i = 0; i < prof.radii.size(); ++i) {
    double row_max = -INFINITY;
    bool row_complete = true;
    for (std::size_t j = 0; j < prof.directions.size(); ++j) {
      ++out.total_cells;
      const auto& t = prof.times[i][j];
      if (t) {
        ++out.settled_cells;
        row_max = std::max(row_max, *t);
        out.max_settling_time = std::max(out.max_settling_time, *t);
        all_monotone_unsettled = false;
      } else {
        row_complete = false;
        const bool ran_out = prof.terminations[i][j] == Termination::t_max_reached;
        const bool mono = i < prof.norm_monotone.size() && prof.norm_monotone[i][j];
        const bool shrank = i < prof.final_norms.size() && prof.final_norms[i][j] < prof.radii[i];
        if (!(ran_out && mono && shrank)) all_monotone_unsettled = false;
      }
    }
    if (prof.radii[i] > 0.0) {
      r_lo = std::min(r_lo, prof.radii[i]);
      r_hi = std::max(r_hi, prof.radii[i]);
      if (row_complete) {
        log_r.push_back(std::log(prof.radii[i]));
        worst_t.push_back(row_max);
      }
    }
  }
  out.radius_decades = r_hi > 0.0 && std::isfinite(r_lo) ? std::log10(r_hi / r_lo) : 0.0;
  out.saturation_delta = prof.saturation_delta;
  const bool all_settled = out.total_cells > 0 && out.settled_cells == out.total_cells;

  std::vector<double> distinct = log_r;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() >= rules.min_fit_radii) out.log_fit = linear_fit(log_r, worst_t);

  if (all_settled && out.radius_decades >= rules.min_decades && prof.saturation_delta &&
      *prof.saturation_delta <= rules.saturation_rel * out.max_settling_time) {
    out.evidence = StabilityEvidence::fixed_time;
    out.rule = "settling time saturates over the radius span";
  } else if (all_settled && out.log_fit && out.log_fit->slope > 0.0 && out.log_fit->r2 > rules.log_fit_r2) {
    out.evidence = StabilityEvidence::asymptotic;
    out.rule = "settling time grows like log of the initial radius";
  } else if (all_settled) {
    out.evidence = StabilityEvidence::finite_time;
    out.rule = "every cell settles but the time does not saturate";
  } else if (out.total_cells > 0 && all_monotone_unsettled) {
    out.evidence = StabilityEvidence::asymptotic;
    out.rule = "trajectories shrink monotonically without reaching the stop ball";
  } else {
    out.evidence = StabilityEvidence::inconclusive;
    out.rule = "no rule matched";
  }
  return out;
}

}  // namespace fxts
