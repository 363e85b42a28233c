#pragma once

#include <acs/error.hpp>
#include <acs/fps.hpp>
#include <acs/nlp.hpp>
#include <acs/power.hpp>
#include <acs/taskmodel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace acs {

// A point of the reduced problem: end time and worst-case budget per fragment.
struct StartPoint {
  std::vector<double> te;
  std::vector<double> w_hat;
};

struct SolverOptions {
  int starts = 8;
  std::uint64_t seed = 1;
  int max_outer = 20;
  int max_inner = 2000;
  double stationarity_tol = 1e-8;  // projected-gradient norm, scaled variables
  double feasibility_tol = 1e-10;  // constraint violation, scaled by the frame length
  std::vector<StartPoint> warm_starts;  // tried before the built-in starts
};

enum class SolveStatus {
  Converged,
  IterationLimit,  // feasible, but the stationarity test was not met
};

inline const char* to_string(SolveStatus s) {
  return s == SolveStatus::Converged ? "converged" : "iteration_limit";
}

// Output of the offline phase. te and w_hat go to the runtime; the rest is diagnostic.
struct StaticSchedule {
  std::string policy = "acs";
  std::vector<double> te;
  std::vector<double> w_hat;
  std::vector<double> ts;
  std::vector<double> w_bar;
  std::vector<double> v_bar;
  std::vector<double> v_hat;
  double objective = 0.0;  // predicted average energy per frame
  SolveStatus status = SolveStatus::Converged;
  double residual_max = 0.0;
  std::uint64_t seed = 0;
  int best_start = -1;
  int feasible_starts = 0;
};

// Result of running every job at vmax with worst-case cycles, fragments
// limited to their segments (rate-monotonic at full speed).
struct VmaxWitness {
  bool schedulable = true;
  StartPoint point;
  std::string detail;
};

inline VmaxWitness vmax_witness(const NlpProblem& p) {
  const FPSchedule& fps = p.fps();
  const double ct = p.fastest_cycle_time();
  VmaxWitness out;
  out.point.te.resize(p.size());
  out.point.w_hat.resize(p.size());
  std::vector<double> remaining(p.jobs().size());
  for (std::size_t j = 0; j < remaining.size(); ++j) remaining[j] = p.jobs()[j].wcec;
  double t = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    const auto& st = p.subs()[s];
    const auto& job = p.jobs()[st.job];
    const bool last = st.part + 1 == job.parts.size();
    const double start = std::max(t, st.release);
    const double limit = last ? st.deadline : static_cast<double>(fps[s].seg_end);
    const double cap = std::max(0.0, (limit - start) / ct);
    const double exec = last ? remaining[st.job] : std::min(remaining[st.job], cap);
    remaining[st.job] -= exec;
    const double finish = start + exec * ct;
    out.point.w_hat[s] = exec;
    out.point.te[s] = finish;
    if (last && finish > st.deadline * (1.0 + 1e-12) && out.schedulable) {
      out.schedulable = false;
      std::ostringstream os;
      os << "job (" << fps[s].id.task << "," << fps[s].id.instance
         << ") with worst-case cycles at vmax finishes at " << finish << " > deadline "
         << st.deadline;
      out.detail = os.str();
    }
    t = finish;
  }
  if (out.schedulable) out.detail = "all jobs meet their deadlines at vmax";
  return out;
}

namespace detail {

// Euclidean projection onto {y >= 0, sum y = total}.
inline void project_simplex(std::span<double> y, double total) {
  std::vector<double> u(y.begin(), y.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double cand = (cum - total) / static_cast<double>(k + 1);
    if (u[k] - cand > 0.0) theta = cand;
  }
  for (double& v : y) v = std::max(0.0, v - theta);
}

// Pushes te onto the chain polyhedron for fixed budgets:
//   te_s >= R_s + a_s, te_s >= te_{s-1} + a_s, te_s <= D_s, a_s = w_s * CT(vmax) * (1 + margin).
// Returns false when the budgets admit no feasible te (up to rounding).
inline bool repair_chain(const NlpProblem& p, std::vector<double>& te, std::span<const double> w, double margin) {
  const std::size_t n = p.size();
  const double ct = p.fastest_cycle_time() * (1.0 + margin);
  std::vector<double> latest(n);
  for (std::size_t s = n; s-- > 0;) {
    latest[s] = p.subs()[s].deadline;
    if (s + 1 < n) latest[s] = std::min(latest[s], latest[s + 1] - w[s + 1] * ct);
  }
  double prev = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double a = w[s] * ct;
    const double lo = std::max(p.subs()[s].release + a, prev + a);
    const double hi = latest[s] + 1e-12 * std::max(1.0, std::abs(latest[s]));
    if (lo > hi) return false;
    te[s] = std::clamp(te[s], lo, std::max(lo, latest[s]));
    prev = te[s];
  }
  return true;
}

// Augmented-Lagrangian spectral projected gradient over scaled variables
// x = (te / L, w_hat / WCEC_job).
class AlSpg {
 public:
  AlSpg(const NlpProblem& p, const SolverOptions& opt) : p_(p), opt_(opt), n_(p.size()) {
    frame_ = std::max(1.0, static_cast<double>(p.taskset().hyper_period()));
    f_ref_ = 0.0;
    for (const auto& job : p.jobs()) {
      const auto& st = p.subs()[job.parts.front()];
      f_ref_ += st.capacitance * job.wcec * p.model().vmax() * p.model().vmax();
    }
    f_ref_ = std::max(f_ref_, 1e-300);
    w_scale_.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) w_scale_[s] = p.jobs()[p.subs()[s].job].wcec;
    mu_a_.assign(n_, 0.0);
    mu_b_.assign(n_, 0.0);
  }

  // Returns true on stationarity + feasibility.
  bool run(StartPoint& pt) {
    std::vector<double> x(2 * n_);
    for (std::size_t s = 0; s < n_; ++s) {
      x[s] = pt.te[s] / frame_;
      x[n_ + s] = pt.w_hat[s] / w_scale_[s];
    }
    project(x);
    rho_ = 100.0;
    std::fill(mu_a_.begin(), mu_a_.end(), 0.0);
    std::fill(mu_b_.begin(), mu_b_.end(), 0.0);
    double prev_viol = std::numeric_limits<double>::infinity();
    bool ok = false;
    for (int outer = 0; outer < opt_.max_outer; ++outer) {
      const bool stationary = spg(x);
      const double viol = update_multipliers(x);
      if (viol <= opt_.feasibility_tol && stationary) {
        ok = true;
        break;
      }
      if (viol > 0.25 * prev_viol) rho_ = std::min(rho_ * 10.0, 1e12);
      prev_viol = viol;
    }
    unscale(x, pt);
    return ok;
  }

 private:
  void unscale(const std::vector<double>& x, StartPoint& pt) const {
    pt.te.resize(n_);
    pt.w_hat.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) {
      pt.te[s] = x[s] * frame_;
      pt.w_hat[s] = x[n_ + s] * w_scale_[s];
    }
  }

  void project(std::vector<double>& x) const {
    for (std::size_t s = 0; s < n_; ++s)
      x[s] = std::clamp(x[s], p_.subs()[s].release / frame_, p_.subs()[s].deadline / frame_);
    std::vector<double> buf;
    for (const auto& job : p_.jobs()) {
      buf.clear();
      for (std::size_t order : job.parts) buf.push_back(x[n_ + order]);
      project_simplex(buf, 1.0);
      for (std::size_t q = 0; q < job.parts.size(); ++q) x[n_ + job.parts[q]] = buf[q];
    }
  }

  // Scaled chain constraints c >= 0.
  double con_a(const std::vector<double>& x, std::size_t s) const {
    return x[s] - p_.subs()[s].release / frame_ - x[n_ + s] * w_scale_[s] * p_.fastest_cycle_time() / frame_;
  }
  double con_b(const std::vector<double>& x, std::size_t s) const {
    const double prev = s > 0 ? x[s - 1] : 0.0;
    return x[s] - prev - x[n_ + s] * w_scale_[s] * p_.fastest_cycle_time() / frame_;
  }

  double phi(const std::vector<double>& x, std::vector<double>& g) {
    std::vector<double> te(n_), w(n_), gte(n_), gw(n_);
    for (std::size_t s = 0; s < n_; ++s) {
      te[s] = x[s] * frame_;
      w[s] = x[n_ + s] * w_scale_[s];
    }
    double val = p_.objective_gradient(te, w, gte, gw) / f_ref_;
    g.assign(2 * n_, 0.0);
    for (std::size_t s = 0; s < n_; ++s) {
      g[s] = gte[s] * frame_ / f_ref_;
      g[n_ + s] = gw[s] * w_scale_[s] / f_ref_;
    }
    const double ct = p_.fastest_cycle_time() / frame_;
    for (std::size_t s = 0; s < n_; ++s) {
      const double dw = -w_scale_[s] * ct;
      const double ta = mu_a_[s] / rho_ - con_a(x, s);
      if (ta > 0.0) {
        val += 0.5 * rho_ * ta * ta;
        g[s] -= rho_ * ta;
        g[n_ + s] -= rho_ * ta * dw;
      }
      const double tb = mu_b_[s] / rho_ - con_b(x, s);
      if (tb > 0.0) {
        val += 0.5 * rho_ * tb * tb;
        g[s] -= rho_ * tb;
        if (s > 0) g[s - 1] += rho_ * tb;
        g[n_ + s] -= rho_ * tb * dw;
      }
    }
    ++evaluations_;
    return val;
  }

  double update_multipliers(const std::vector<double>& x) {
    double viol = 0.0;
    for (std::size_t s = 0; s < n_; ++s) {
      const double ca = con_a(x, s);
      const double cb = con_b(x, s);
      viol = std::max({viol, std::abs(std::min(ca, mu_a_[s] / rho_)), std::abs(std::min(cb, mu_b_[s] / rho_))});
      mu_a_[s] = std::max(0.0, mu_a_[s] - rho_ * ca);
      mu_b_[s] = std::max(0.0, mu_b_[s] - rho_ * cb);
    }
    return viol;
  }

  // Nonmonotone spectral projected gradient; returns true when stationary.
  bool spg(std::vector<double>& x) {
    constexpr int kMemory = 10;
    constexpr double kGamma = 1e-4;
    constexpr double kStepMin = 1e-12;
    constexpr double kStepMax = 1e12;
    const std::size_t m = x.size();
    std::vector<double> g, g_new, trial(m), d(m), pg(m);
    double f = phi(x, g);
    std::vector<double> history(kMemory, f);
    auto pg_norm = [&]() {
      for (std::size_t q = 0; q < m; ++q) pg[q] = x[q] - g[q];
      project(pg);
      double nrm = 0.0;
      for (std::size_t q = 0; q < m; ++q) nrm = std::max(nrm, std::abs(pg[q] - x[q]));
      return nrm;
    };
    double gnorm = pg_norm();
    double step = gnorm > 0.0 ? std::clamp(1.0 / gnorm, kStepMin, kStepMax) : 1.0;
    for (int it = 0; it < opt_.max_inner; ++it) {
      if (gnorm <= opt_.stationarity_tol) return true;
      for (std::size_t q = 0; q < m; ++q) d[q] = x[q] - step * g[q];
      project(d);
      double gd = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        d[q] -= x[q];
        gd += g[q] * d[q];
      }
      if (gd >= 0.0) return true;  // no descent available at machine precision
      const double f_max = *std::max_element(history.begin(), history.end());
      double alpha = 1.0;
      double f_trial = 0.0;
      int backtracks = 0;
      for (;;) {
        for (std::size_t q = 0; q < m; ++q) trial[q] = x[q] + alpha * d[q];
        f_trial = phi(trial, g_new);
        if (f_trial <= f_max + kGamma * alpha * gd || backtracks > 60) break;
        const double denom = f_trial - f - alpha * gd;
        double next = denom > 0.0 ? -0.5 * alpha * alpha * gd / denom : 0.5 * alpha;
        if (next < 0.1 * alpha || next > 0.9 * alpha) next = 0.5 * alpha;
        alpha = next;
        ++backtracks;
      }
      if (backtracks > 60) return false;
      double ss = 0.0, sy = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        const double sq = trial[q] - x[q];
        ss += sq * sq;
        sy += sq * (g_new[q] - g[q]);
      }
      x.swap(trial);
      g.swap(g_new);
      f = f_trial;
      history[static_cast<std::size_t>(it) % kMemory] = f;
      step = sy > 0.0 ? std::clamp(ss / sy, kStepMin, kStepMax) : kStepMax;
      gnorm = pg_norm();
      if (ss == 0.0) return gnorm <= opt_.stationarity_tol;
    }
    return gnorm <= opt_.stationarity_tol;
  }

  const NlpProblem& p_;
  const SolverOptions& opt_;
  std::size_t n_;
  double frame_ = 1.0;
  double f_ref_ = 1.0;
  double rho_ = 100.0;
  std::vector<double> w_scale_;
  std::vector<double> mu_a_;
  std::vector<double> mu_b_;
  long evaluations_ = 0;
};

inline std::vector<StartPoint> initial_points(const NlpProblem& p, const VmaxWitness& witness,
                                              const SolverOptions& opt) {
  std::vector<StartPoint> pts(opt.warm_starts.begin(), opt.warm_starts.end());
  pts.push_back(witness.point);

  // Budgets proportional to segment lengths, end times at segment ends.
  StartPoint prop;
  prop.te.resize(p.size());
  prop.w_hat.resize(p.size());
  for (const auto& job : p.jobs()) {
    const double span = static_cast<double>(p.fps()[job.parts.back()].seg_end - p.fps()[job.parts.front()].seg_start);
    for (std::size_t order : job.parts) {
      const SubInstance& s = p.fps()[order];
      prop.w_hat[order] = job.wcec * static_cast<double>(s.seg_end - s.seg_start) / span;
      prop.te[order] = static_cast<double>(s.seg_end);
    }
  }
  pts.push_back(prop);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int builtin = std::max(1, opt.starts);
  for (int r = 2; r < builtin; ++r) {
    std::vector<double> raw(p.size());
    for (double& v : raw) v = unit(rng);
    double mix = unit(rng);
    StartPoint pt;
    pt.w_hat.resize(p.size());
    pt.te = witness.point.te;
    bool feasible = false;
    for (int attempt = 0; attempt < 12 && !feasible; ++attempt) {
      for (const auto& job : p.jobs()) {
        double sum = 0.0;
        for (std::size_t order : job.parts) sum += raw[order];
        for (std::size_t order : job.parts)
          pt.w_hat[order] = mix * witness.point.w_hat[order] + (1.0 - mix) * job.wcec * raw[order] / sum;
      }
      feasible = repair_chain(p, pt.te, pt.w_hat, 0.0);
      if (!feasible) mix = 0.5 * (1.0 + mix);
    }
    // Random end times inside the chain polyhedron.
    const double ct = p.fastest_cycle_time();
    std::vector<double> latest(p.size());
    for (std::size_t s = p.size(); s-- > 0;) {
      latest[s] = p.subs()[s].deadline;
      if (s + 1 < p.size()) latest[s] = std::min(latest[s], latest[s + 1] - pt.w_hat[s + 1] * ct);
    }
    double prev = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
      const double lo = std::max(p.subs()[s].release, prev) + pt.w_hat[s] * ct;
      const double hi = std::max(lo, latest[s]);
      pt.te[s] = lo + unit(rng) * (hi - lo);
      prev = pt.te[s];
    }
    pts.push_back(std::move(pt));
  }
  return pts;
}

inline bool repair_either(const NlpProblem& p, std::vector<double>& te, std::span<const double> w) {
  return repair_chain(p, te, w, 1e-12) || repair_chain(p, te, w, 0.0);
}

// Makes pt worst-case feasible. Budgets that admit no end times are blended
// toward the witness budgets, which always do; the smallest such blend is kept.
inline bool restore(const NlpProblem& p, const VmaxWitness& witness, StartPoint& pt) {
  if (repair_either(p, pt.te, pt.w_hat)) return true;
  if (!witness.schedulable) return false;
  const std::vector<double> w0 = pt.w_hat;
  const std::vector<double> te0 = pt.te;
  std::vector<double> w(w0.size()), te;
  auto blend = [&](double mix) {
    for (std::size_t s = 0; s < w.size(); ++s) w[s] = (1.0 - mix) * w0[s] + mix * witness.point.w_hat[s];
    te = te0;
    return repair_either(p, te, w);
  };
  double lo = 0.0, hi = 1.0;
  if (!blend(hi)) return false;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (blend(mid)) hi = mid;
    else lo = mid;
  }
  blend(hi);
  pt.w_hat = w;
  pt.te = te;
  return true;
}

}  // namespace detail

/// Multi-start local solve of the reduced NLP. The best feasible local optimum
/// wins; ties go to the earlier start. Throws InfeasibleError if no start
/// reaches a worst-case-feasible point.
inline StaticSchedule solve_acs(const NlpProblem& problem, const SolverOptions& options = {}) {
  const VmaxWitness witness = vmax_witness(problem);
  const std::vector<StartPoint> starts = detail::initial_points(problem, witness, options);

  StaticSchedule best;
  best.seed = options.seed;
  double best_obj = std::numeric_limits<double>::infinity();
  bool best_converged = false;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    StartPoint pt = starts[k];
    detail::AlSpg solver(problem, options);
    const bool converged = solver.run(pt);
    for (double& w : pt.w_hat) w = std::max(0.0, w);
    if (!detail::restore(problem, witness, pt)) continue;
    ++best.feasible_starts;
    const double obj = problem.objective(pt.te, pt.w_hat);
    if (best.best_start < 0 || obj < best_obj - 1e-12 * std::abs(best_obj)) {
      best_obj = obj;
      best_converged = converged;
      best.best_start = static_cast<int>(k);
      best.te = pt.te;
      best.w_hat = pt.w_hat;
    }
  }
  if (best.best_start < 0) {
    throw InfeasibleError("no worst-case-feasible schedule found from " + std::to_string(starts.size()) +
                              " starts",
                          witness.detail);
  }
  const Assignment a = problem.complete(best.te, best.w_hat);
  best.ts = a.ts;
  best.w_bar = a.w_bar;
  best.v_bar = a.v_bar;
  best.v_hat = a.v_hat;
  best.objective = a.objective;
  best.status = best_converged ? SolveStatus::Converged : SolveStatus::IterationLimit;
  best.residual_max = constraint_residuals(problem, a).max;
  return best;
}

/// Worst-case-only baseline: the same problem with every ACEC set to the WCEC.
inline StaticSchedule solve_wcs(const FPSchedule& fps, const TaskSet& taskset, const PowerModel& model,
                                const SolverOptions& options = {}) {
  const NlpProblem worst(fps, taskset.with_worst_case_average(), model);
  StaticSchedule out = solve_acs(worst, options);
  out.policy = "wcs";
  return out;
}

}  // namespace acs
