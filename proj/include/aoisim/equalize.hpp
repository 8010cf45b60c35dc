#pragma once

// Max-min equalization of monotone per-device scores under a shared budget.
//
// Given increasing score functions f_k on boxes [x_min_k, x_max_k] and a
// budget C with sum(x_min) <= C, maximizing min_k f_k(x_k) subject to
// sum(x_k) <= C puts every unclamped device at a common score level. The
// level is found by bisection: for a trial level L the cheapest allocation
// meeting it is x_k = clamp(f_k^{-1}(L)), and its total cost is monotone
// in L. Devices pinned at x_max sit below the common level; devices pinned
// at x_min sit above it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoisim {

struct ScoreFunction {
  std::function<double(double)> f;
  double x_min = 0.0;
  double x_max = 0.0;
};

struct MonotoneFamily {
  std::vector<ScoreFunction> members;
  double budget = 0.0;
};

// Raised when a score function fails the increase probe; carries the
// offending member index so callers can fall back per device.
class MonotonicityError : public std::runtime_error {
 public:
  MonotonicityError(int member, const std::string& what)
      : std::runtime_error(what), member_(member) {}
  int member() const { return member_; }

 private:
  int member_;
};

struct InvertResult {
  double x = 0.0;
  bool clamped_low = false;   // target below f(x_min)
  bool clamped_high = false;  // target above f(x_max)
};

// Solves f(x) = target for increasing f on [x_min, x_max] by bisection.
// Stops when |f(x) - target| <= tol_f * max(1, |target|) or the bracket
// collapses to floating-point resolution. Targets outside the range of f
// clamp to the nearer endpoint and set the corresponding flag.
inline InvertResult invert_monotone(const std::function<double(double)>& f,
                                    double x_min, double x_max, double target,
                                    double tol_f = 1e-9) {
  if (!(x_max >= x_min)) {
    throw std::invalid_argument("invert_monotone: empty interval");
  }
  const double f_tol = tol_f * std::max(1.0, std::abs(target));
  InvertResult r;
  const double f_lo = f(x_min);
  if (target <= f_lo) {
    r.x = x_min;
    r.clamped_low = target < f_lo - f_tol;
    return r;
  }
  const double f_hi = f(x_max);
  if (target >= f_hi) {
    r.x = x_max;
    r.clamped_high = target > f_hi + f_tol;
    return r;
  }
  double lo = x_min, hi = x_max;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm - target) <= f_tol) {
      r.x = mid;
      return r;
    }
    (fm < target ? lo : hi) = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       std::max({1.0, std::abs(lo), std::abs(hi)})) {
      break;
    }
  }
  r.x = 0.5 * (lo + hi);
  return r;
}

// Samples f on a uniform grid and demands it never loses ground between
// consecutive points and gains overall. Saturated stretches tie to the exact
// same double once the underlying quantity hits a clamp or the limit of
// double resolution; those ties, and jitter in the last few digits, are
// tolerated because the bisection inversion only needs weak monotonicity.
// A resolvable decrease or a member that never rises fails the probe;
// callers treat that as "this member cannot be inverted" and switch methods.
inline void probe_increasing(const ScoreFunction& s, int member,
                             int grid_points = 257) {
  const auto bail = [&](const std::string& why) {
    throw MonotonicityError(member,
                            "score function " + std::to_string(member) + " " + why);
  };
  double prev = s.f(s.x_min);
  if (!std::isfinite(prev)) bail("is not finite at its lower bound");
  const double first = prev;
  for (int i = 1; i < grid_points; ++i) {
    const double x = s.x_min + (s.x_max - s.x_min) * i / (grid_points - 1);
    const double cur = s.f(x);
    if (!std::isfinite(cur)) bail("is not finite at x=" + std::to_string(x));
    if (cur < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
      bail("decreases near x=" + std::to_string(x));
    }
    prev = cur;
  }
  if (!(prev > first)) bail("does not increase across its domain");
}

struct Allocation {
  std::vector<double> x;
  double level = 0.0;          // achieved min score
  double used_budget = 0.0;
  std::vector<bool> at_min;    // pinned above the common level
  std::vector<bool> at_max;    // pinned below the common level
};

// Equalizes the family to a common score level. Preconditions: every member
// passes the increase probe and sum(x_min) <= budget. If even sum(x_max)
// fits the budget every member simply takes its maximum.
inline Allocation equalize_sum(const MonotoneFamily& family, double tol_f = 1e-9) {
  const auto& ms = family.members;
  const int n = static_cast<int>(ms.size());
  if (n == 0) throw std::invalid_argument("equalize_sum: empty family");
  for (int k = 0; k < n; ++k) probe_increasing(ms[k], k);

  double sum_min = 0.0, sum_max = 0.0;
  double lo_level = std::numeric_limits<double>::infinity();
  double hi_level = -std::numeric_limits<double>::infinity();
  for (const auto& s : ms) {
    sum_min += s.x_min;
    sum_max += s.x_max;
    lo_level = std::min(lo_level, s.f(s.x_min));
    hi_level = std::max(hi_level, s.f(s.x_max));
  }
  if (sum_min > family.budget * (1.0 + 1e-12)) {
    throw std::invalid_argument("equalize_sum: lower bounds alone exceed the budget");
  }

  Allocation out;
  out.x.resize(n);
  out.at_min.assign(n, false);
  out.at_max.assign(n, false);

  const auto fill_at = [&](double level) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto r = invert_monotone(ms[k].f, ms[k].x_min, ms[k].x_max, level, tol_f);
      out.x[k] = r.x;
      out.at_min[k] = (r.x == ms[k].x_min);
      out.at_max[k] = (r.x == ms[k].x_max);
      total += r.x;
    }
    return total;
  };

  if (sum_max <= family.budget) {
    for (int k = 0; k < n; ++k) {
      out.x[k] = ms[k].x_max;
      out.at_max[k] = true;
    }
  } else {
    // Largest level whose cheapest supporting allocation still fits.
    double lo = lo_level, hi = hi_level;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fill_at(mid) <= family.budget ? lo : hi) = mid;
      if (hi - lo <= 1e-14 * std::max({1.0, std::abs(lo), std::abs(hi)})) break;
    }
    fill_at(lo);

    // Hand the bisection slack to the unpinned members so the budget binds
    // exactly; the slack is tiny, so the common level barely moves.
    for (int pass = 0; pass < 4; ++pass) {
      double total = 0.0;
      int free_count = 0;
      for (int k = 0; k < n; ++k) {
        total += out.x[k];
        if (!out.at_max[k]) ++free_count;
      }
      const double leftover = family.budget - total;
      if (free_count == 0 || std::abs(leftover) <= 1e-12 * family.budget) break;
      const double bump = leftover / free_count;
      for (int k = 0; k < n; ++k) {
        if (out.at_max[k]) continue;
        out.x[k] = std::clamp(out.x[k] + bump, ms[k].x_min, ms[k].x_max);
        out.at_min[k] = (out.x[k] == ms[k].x_min);
        out.at_max[k] = (out.x[k] == ms[k].x_max);
      }
    }
  }

  out.used_budget = 0.0;
  out.level = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    out.used_budget += out.x[k];
    out.level = std::min(out.level, ms[k].f(out.x[k]));
  }
  return out;
}

// Trims [x_min, x_max] to the window where f actually gains ground. The
// scores this serves typically saturate flat at both ends (an underlying
// error rate pinned at its floor or ceiling) with a rising stretch between,
// or rise to a peak and fall off. The returned box starts where f first
// leaves its left plateau and ends at the peak; when the top of the window
// is saturated, it is pulled back to the earliest point within a small
// relative slack of the peak so a flat tail cannot eat budget. A residual
// decrease inside the window will still fail the probe later, routing
// callers to their fallback.
inline ScoreFunction cap_to_increasing_region(const ScoreFunction& s,
                                              int grid_points = 257) {
  const double span = s.x_max - s.x_min;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double x = s.x_min + span * i / (grid_points - 1);
    const double v = s.f(x);
    if (std::isfinite(v) && v > best_val) {
      best_val = v;
      best = i;
    }
  }

  ScoreFunction capped = s;
  if (best < grid_points - 1) {
    // Golden-section refinement of the peak within its grid bracket.
    double lo = s.x_min + span * std::max(0, best - 1) / (grid_points - 1);
    double hi = s.x_min + span * std::min(grid_points - 1, best + 1) / (grid_points - 1);
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
    double fa = s.f(a), fb = s.f(b);
    for (int it = 0; it < 80 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
      if (fa < fb) {
        lo = a;
        a = b;
        fa = fb;
        b = lo + inv_phi * (hi - lo);
        fb = s.f(b);
      } else {
        hi = b;
        b = a;
        fb = fa;
        a = hi - inv_phi * (hi - lo);
        fa = s.f(a);
      }
    }
    capped.x_max = 0.5 * (lo + hi);
  }

  // Raise the lower edge past any left plateau: smallest x whose score
  // strictly exceeds f(x_min).
  const double f_low = s.f(s.x_min);
  if (std::isfinite(f_low) && s.f(capped.x_max) > f_low) {
    double lo = s.x_min, hi = capped.x_max;
    for (int it = 0; it < 120 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (s.f(mid) > f_low ? hi : lo) = mid;
    }
    capped.x_min = hi;
  }

  // Lower the upper edge past any saturated tail: when the score just below
  // the window top ties with the top, the rise has stalled (clamp reached or
  // below double resolution), so move x_max to the earliest point within a
  // relative slack of the peak. A resolvable rise at the top means a genuine
  // monotone member; its upper bound is kept exactly.
  const double f_peak = s.f(capped.x_max);
  const double width = capped.x_max - capped.x_min;
  if (std::isfinite(f_peak) && width > 0.0 && s.f(capped.x_min) < f_peak) {
    const double step = std::max(1e-6 * width, 1e-9 * std::abs(capped.x_max));
    if (!(s.f(capped.x_max - step) < f_peak)) {
      const double floor_val = f_peak - 1e-12 * std::max(1.0, std::abs(f_peak));
      double lo = capped.x_min, hi = capped.x_max;
      for (int it = 0; it < 120 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (s.f(mid) >= floor_val ? hi : lo) = mid;
      }
      capped.x_max = hi;
    }
  }
  return capped;
}

}  // namespace aoisim
