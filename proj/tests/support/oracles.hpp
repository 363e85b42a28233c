#pragma once

// Reference implementations used only by the tests. They share no code with
// the library beyond its plain data types.

#include <acs/fps.hpp>
#include <acs/nlp.hpp>
#include <acs/power.hpp>
#include <acs/taskmodel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace oracle {

// Smallest positive multiple of every period, by scanning multiples of the largest.
inline std::int64_t brute_lcm(const std::vector<std::int64_t>& periods) {
  const std::int64_t top = *std::max_element(periods.begin(), periods.end());
  for (std::int64_t m = top;; m += top) {
    bool all = true;
    for (auto p : periods) all = all && m % p == 0;
    if (all) return m;
  }
}

struct Power {
  bool inverse = false;
  double lambda = 1.0, vth = 0.0, alpha = 1.0, vmin = 0.0, vmax = 0.0;

  static Power of(const acs::PowerModel& m) {
    return {m.law() == acs::PowerLaw::InverseLaw, m.lambda(), m.vth(), m.alpha(), m.vmin(), m.vmax()};
  }
  double ct(double v) const { return inverse ? lambda / v : lambda * v / std::pow(v - vth, alpha); }
  // Inverse by bisection on the decreasing cycle time.
  double volts(double c) const {
    if (c >= ct(vmin)) return vmin;
    if (c <= ct(vmax)) return vmax;
    if (inverse) return lambda / c;
    double lo = vmin, hi = vmax;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (ct(mid) > c) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }
};

struct Residuals {
  double max = 0.0;
  int family = 0;
  std::size_t where = 0;
};

/// Relative violation of each literal constraint family at the stored values.
/// (9) uses max(te_prev, R) as the left reference; (14) is read as w * ol >= w_hat * ol.
inline Residuals residuals(const acs::FPSchedule& fps, const acs::TaskSet& ts, const acs::PowerModel& model,
                           const acs::Assignment& a) {
  const Power pw = Power::of(model);
  Residuals r;
  auto bump = [&r](int fam, std::size_t s, double viol, double scale) {
    const double v = std::max(0.0, viol) / std::max(1.0, scale);
    if (v > r.max) r = {v, fam, s};
  };
  const double vt = 1e-12;
  for (std::size_t s = 0; s < fps.size(); ++s) {
    const auto& sub = fps[s];
    const double R = static_cast<double>(sub.release);
    const double D = static_cast<double>(sub.deadline);
    bump(5, s, R - a.ts[s], std::abs(R));
    bump(6, s, a.te[s] - D, std::abs(D));
    for (double v : {a.v_bar[s], a.v_hat[s]}) {
      bump(7, s, pw.vmin - v - vt, pw.vmin);
      bump(7, s, v - pw.vmax - vt, pw.vmax);
    }
    const double rhs8 = a.ts[s] + a.w_hat[s] * pw.ct(a.v_bar[s]);
    bump(8, s, std::abs(a.te[s] - rhs8), std::max(std::abs(a.te[s]), std::abs(rhs8)));
    const double prev_te = s == 0 ? 0.0 : a.te[s - 1];
    const double ref = std::max(prev_te, R);
    bump(9, s, a.w_hat[s] * pw.ct(a.v_hat[s]) - (a.te[s] - ref), std::abs(a.te[s]));
    if (s > 0) {
      const double bound = a.te[s - 1] - (a.w_hat[s - 1] - a.w_bar[s - 1]) * pw.ct(a.v_hat[s - 1]);
      bump(10, s, bound - a.ts[s], std::max(std::abs(bound), std::abs(a.ts[s])));
    }
    bump(13, s, a.w_bar[s] - a.w_hat[s], a.w_hat[s]);
    bump(13, s, -a.w_bar[s], 1.0);
  }
  for (const acs::Job& job : fps.jobs()) {
    const acs::Task& t = ts.task(job.instance.task);
    double sum_bar = 0.0, sum_hat = 0.0;
    for (std::size_t s : job.parts) {
      sum_bar += a.w_bar[s];
      sum_hat += a.w_hat[s];
      const double ol = t.acec - sum_bar;
      bump(14, s, a.w_hat[s] * ol - a.w_bar[s] * ol, t.wcec * t.wcec);
    }
    bump(11, job.parts.front(), std::abs(sum_bar - t.acec), t.acec);
    bump(12, job.parts.front(), std::abs(sum_hat - t.wcec), t.wcec);
  }
  return r;
}

/// Reduced objective written out directly: average fill, worst-case cycle
/// time over [max(R, te_prev), te], average window opened by the predecessor's
/// worst-case slack. Returns +inf when (te, w_hat) is not worst-case feasible.
inline double objective(const acs::FPSchedule& fps, const acs::TaskSet& ts, const acs::PowerModel& model,
                        const std::vector<double>& te, const std::vector<double>& wh) {
  const Power pw = Power::of(model);
  const double ct_fast = pw.ct(pw.vmax), ct_slow = pw.ct(pw.vmin);
  std::vector<double> wb(fps.size(), 0.0);
  for (const acs::Job& job : fps.jobs()) {
    double left = ts.task(job.instance.task).acec;
    for (std::size_t s : job.parts) {
      wb[s] = std::min(left, wh[s]);
      left -= wb[s];
    }
  }
  double total = 0.0, prev_te = 0.0, prev_slack = 0.0;
  for (std::size_t s = 0; s < fps.size(); ++s) {
    const auto& sub = fps[s];
    const double R = static_cast<double>(sub.release);
    if (te[s] > static_cast<double>(sub.deadline) + 1e-12 || te[s] < R - 1e-12) return INFINITY;
    const double base = std::max(R, prev_te);
    if (te[s] - base < wh[s] * ct_fast - 1e-12) return INFINITY;
    double slack = 0.0;
    if (wh[s] > 0.0) {
      const double ct_hat = std::clamp((te[s] - base) / wh[s], ct_fast, ct_slow);
      slack = (wh[s] - wb[s]) * ct_hat;
      const double lb = s == 0 ? R : std::max(R, prev_te - prev_slack);
      const double ct_bar = std::clamp((te[s] - lb) / wh[s], ct_fast, ct_slow);
      const double v = pw.volts(ct_bar);
      total += ts.task(sub.id.task).capacitance * wb[s] * v * v;
    }
    prev_te = te[s];
    prev_slack = slack;
  }
  return total;
}

/// Exhaustive search: te on a lattice of `step` inside each [R, D], w_hat on
/// integer splits of each job's WCEC.
inline double grid_minimum(const acs::FPSchedule& fps, const acs::TaskSet& ts, const acs::PowerModel& model,
                           double step) {
  const std::size_t n = fps.size();
  std::vector<std::vector<std::vector<double>>> splits;  // per job list of part vectors
  for (const acs::Job& job : fps.jobs()) {
    const int W = static_cast<int>(ts.task(job.instance.task).wcec);
    std::vector<std::vector<double>> opts;
    std::vector<double> cur(job.parts.size(), 0.0);
    auto rec = [&](auto&& self, std::size_t q, int left) -> void {
      if (q + 1 == cur.size()) {
        cur[q] = left;
        opts.push_back(cur);
        return;
      }
      for (int x = 0; x <= left; ++x) {
        cur[q] = x;
        self(self, q + 1, left - x);
      }
    };
    rec(rec, 0, W);
    splits.push_back(std::move(opts));
  }
  std::vector<std::vector<double>> lattice(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double R = static_cast<double>(fps[s].release), D = static_cast<double>(fps[s].deadline);
    const int steps = static_cast<int>(std::llround((D - R) / step));
    for (int q = 0; q <= steps; ++q) lattice[s].push_back(R + q * step);
  }
  double best = INFINITY;
  std::vector<double> wh(n), te(n);
  std::vector<std::size_t> pick(splits.size(), 0);
  for (;;) {
    for (std::size_t j = 0; j < splits.size(); ++j) {
      const auto& parts = fps.jobs()[j].parts;
      for (std::size_t q = 0; q < parts.size(); ++q) wh[parts[q]] = splits[j][pick[j]][q];
    }
    auto rec = [&](auto&& self, std::size_t s) -> void {
      if (s == n) {
        best = std::min(best, objective(fps, ts, model, te, wh));
        return;
      }
      for (double v : lattice[s]) {
        te[s] = v;
        if (s > 0 && v < te[s - 1]) continue;
        self(self, s + 1);
      }
    };
    rec(rec, 0);
    std::size_t j = 0;
    while (j < pick.size() && ++pick[j] == splits[j].size()) pick[j++] = 0;
    if (j == pick.size()) break;
  }
  return best;
}

}  // namespace oracle
