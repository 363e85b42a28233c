#pragma once

#include <acs/average_fill.hpp>
#include <acs/error.hpp>
#include <acs/fps.hpp>
#include <acs/power.hpp>
#include <acs/taskmodel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace acs {

// Values of all six variable families at one point of the NLP, in total order.
struct Assignment {
  std::vector<double> ts;
  std::vector<double> te;
  std::vector<double> w_bar;
  std::vector<double> w_hat;
  std::vector<double> v_bar;
  std::vector<double> v_hat;
  double objective = 0.0;
};

// Constraint families of the formulation, numbered as in the model:
// release (5), deadline (6), voltage range (7), end-time coupling (8),
// worst-case window (9), slack-bounded start (10), average sum (11),
// worst-case sum (12), average <= worst case (13), fill complement (14).
inline constexpr std::array<int, 10> kConstraintFamilies{5, 6, 7, 8, 9, 10, 11, 12, 13, 14};

struct ResidualReport {
  std::array<double, 10> by_family{};  // relative violation per family, indexed like kConstraintFamilies
  double max = 0.0;
  int worst_family = 0;
  std::size_t worst_index = 0;  // sub-instance order index, or job slot for (11)/(12)
};

/// The average-case voltage scheduling NLP over a fully preemptive schedule.
///
/// Minimizes sum C_i * w_bar * v_bar^2 subject to (5)-(14). Four of the six
/// variable families have closed-form optima once the end times te and the
/// worst-case budgets w_hat are fixed, and the reduced problem over (te, w_hat)
/// is what the solver sees:
///   w_bar  greedy fill of the job's ACEC over its fragments' budgets,
///   v_hat  lowest voltage that fits w_hat in [max(te_prev, R), te],
///   ts     earliest start allowed by (5) and (10),
///   v_bar  voltage that fits w_hat in [ts, te] per (8).
/// Lowering v_hat enlarges the predecessor slack of (10), and lowering ts
/// lowers v_bar, so these choices are optimal for given (te, w_hat).
/// The worst-case window (9) uses max(te_prev, R) rather than te_prev alone.
class NlpProblem {
 public:
  struct SubTerm {
    std::size_t job = 0;
    std::size_t part = 0;  // position within the job
    double capacitance = 1.0;
    double release = 0.0;
    double deadline = 0.0;
  };
  struct JobTerm {
    double acec = 0.0;
    double wcec = 0.0;
    std::vector<std::size_t> parts;
  };

  NlpProblem(FPSchedule fps, TaskSet taskset, PowerModel model)
      : fps_(std::move(fps)), taskset_(std::move(taskset)), model_(model) {
    ct_slow_ = model_.slowest_cycle_time();
    ct_fast_ = model_.fastest_cycle_time();
    for (const Job& job : fps_.jobs()) {
      const Task& t = taskset_.task(job.instance.task);
      jobs_.push_back({t.acec, t.wcec, job.parts});
    }
    subs_.resize(fps_.size());
    for (const SubInstance& s : fps_) {
      const Task& t = taskset_.task(s.id.task);
      subs_[s.order] = {s.job, static_cast<std::size_t>(s.id.part - 1), t.capacitance,
                        static_cast<double>(s.release), static_cast<double>(s.deadline)};
    }
  }

  const FPSchedule& fps() const noexcept { return fps_; }
  const TaskSet& taskset() const noexcept { return taskset_; }
  const PowerModel& model() const noexcept { return model_; }
  const std::vector<SubTerm>& subs() const noexcept { return subs_; }
  const std::vector<JobTerm>& jobs() const noexcept { return jobs_; }
  std::size_t size() const noexcept { return subs_.size(); }

  // Variables before reduction: ts, te, w_bar, w_hat, v_bar, v_hat per fragment.
  std::size_t variable_count() const noexcept { return 6 * size(); }

  double objective(std::span<const double> te, std::span<const double> w_hat) const {
    Tape tape(size());
    return forward(te, w_hat, tape);
  }

  /// Objective and its gradient with respect to te and w_hat. At kinks the
  /// branch taken by the forward pass supplies the derivative.
  double objective_gradient(std::span<const double> te, std::span<const double> w_hat,
                            std::span<double> grad_te, std::span<double> grad_w) const {
    Tape tape(size());
    const double f = forward(te, w_hat, tape);
    backward(w_hat, tape, grad_te, grad_w);
    return f;
  }

  /// All six variable families at their reduced closed forms.
  Assignment complete(std::span<const double> te, std::span<const double> w_hat) const {
    Tape tape(size());
    Assignment a;
    a.objective = forward(te, w_hat, tape);
    const std::size_t n = size();
    a.te.assign(te.begin(), te.end());
    a.w_hat.assign(w_hat.begin(), w_hat.end());
    a.w_bar = tape.wb;
    a.ts.resize(n);
    a.v_bar.resize(n);
    a.v_hat.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      if (w_hat[s] > 0.0) {
        a.v_hat[s] = model_.voltage_at_cycle_time(tape.cth[s]);
        a.v_bar[s] = tape.vb[s];
        a.ts[s] = tape.ctb_free[s] ? tape.lb[s] : te[s] - w_hat[s] * model_.cycle_time(a.v_bar[s]);
      } else {
        a.v_hat[s] = model_.vmin();
        a.v_bar[s] = model_.vmin();
        a.ts[s] = te[s];
      }
    }
    return a;
  }

  // Minimum duration of w_hat[s] cycles: w_hat[s] * CT(vmax).
  double fastest_cycle_time() const noexcept { return ct_fast_; }
  double slowest_cycle_time() const noexcept { return ct_slow_; }

 private:
  struct Tape {
    explicit Tape(std::size_t n)
        : wb(n), fill_case(n), base(n), dh(n), cth(n), slack(n), lb(n), db(n), ctb(n), vb(n),
          base_prev(n), cth_free(n), lb_prev(n), ctb_free(n) {}
    std::vector<double> wb;
    std::vector<int> fill_case;  // 0 empty, 1 full, 2 partial
    std::vector<double> base, dh, cth, slack, lb, db, ctb, vb;
    std::vector<char> base_prev, cth_free, lb_prev, ctb_free;
  };

  double forward(std::span<const double> te, std::span<const double> w, Tape& tp) const {
    const std::size_t n = size();
    for (const JobTerm& job : jobs_) {
      double left = job.acec;
      for (std::size_t order : job.parts) {
        const double cap = std::max(0.0, w[order]);
        if (left <= 0.0) {
          tp.wb[order] = 0.0;
          tp.fill_case[order] = 0;
        } else if (cap <= left) {
          tp.wb[order] = cap;
          tp.fill_case[order] = 1;
        } else {
          tp.wb[order] = left;
          tp.fill_case[order] = 2;
        }
        left -= tp.wb[order];
      }
    }

    double total = 0.0;
    double te_prev = 0.0;
    double slack_prev = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const SubTerm& st = subs_[s];
      const double ws = w[s];

      tp.base_prev[s] = te_prev > st.release;
      tp.base[s] = tp.base_prev[s] ? te_prev : st.release;
      tp.dh[s] = te[s] - tp.base[s];

      const double lb_cand = te_prev - slack_prev;
      tp.lb_prev[s] = s > 0 && lb_cand > st.release;
      tp.lb[s] = tp.lb_prev[s] ? lb_cand : st.release;
      tp.db[s] = te[s] - tp.lb[s];

      tp.cth[s] = clamp_ct(tp.dh[s], ws, tp.cth_free[s]);
      tp.ctb[s] = clamp_ct(tp.db[s], ws, tp.ctb_free[s]);
      tp.vb[s] = model_.voltage_at_cycle_time(tp.ctb[s]);
      tp.slack[s] = ws > 0.0 ? (ws - tp.wb[s]) * tp.cth[s] : 0.0;
      total += st.capacitance * tp.wb[s] * tp.vb[s] * tp.vb[s];

      te_prev = te[s];
      slack_prev = tp.slack[s];
    }
    return total;
  }

  // Cycle time d / w limited to [CT(vmax), CT(vmin)]; `free` is set when unclamped.
  double clamp_ct(double d, double w, char& free) const noexcept {
    free = 0;
    if (!(w > 0.0)) return ct_slow_;
    const double r = d / w;
    if (r >= ct_slow_) return ct_slow_;
    if (r <= ct_fast_) return ct_fast_;
    free = 1;
    return r;
  }

  void backward(std::span<const double> w, const Tape& tp, std::span<double> g_te,
                std::span<double> g_w) const {
    const std::size_t n = size();
    std::fill(g_te.begin(), g_te.end(), 0.0);
    std::fill(g_w.begin(), g_w.end(), 0.0);
    std::vector<double> g_wb(n, 0.0);
    std::vector<double> g_slack(n, 0.0);

    for (std::size_t s = n; s-- > 0;) {
      const SubTerm& st = subs_[s];
      const double ws = w[s];
      const double vb = tp.vb[s];

      // energy = C * wb * vb(ctb)^2
      g_wb[s] += st.capacitance * vb * vb;
      if (tp.ctb_free[s]) {
        const double g_ctb = 2.0 * st.capacitance * tp.wb[s] * vb / model_.cycle_time_slope(vb);
        const double g_db = g_ctb / ws;
        g_w[s] -= g_ctb * tp.db[s] / (ws * ws);
        g_te[s] += g_db;
        if (tp.lb_prev[s]) {  // lb = te_prev - slack_prev
          g_te[s - 1] -= g_db;
          g_slack[s - 1] += g_db;
        }
      }

      // slack = (w - wb) * cth, only defined for w > 0
      if (ws > 0.0 && g_slack[s] != 0.0) {
        g_w[s] += g_slack[s] * tp.cth[s];
        g_wb[s] -= g_slack[s] * tp.cth[s];
        if (tp.cth_free[s]) {
          const double g_cth = g_slack[s] * (ws - tp.wb[s]);
          const double g_dh = g_cth / ws;
          g_w[s] -= g_cth * tp.dh[s] / (ws * ws);
          g_te[s] += g_dh;
          if (tp.base_prev[s]) g_te[s - 1] -= g_dh;
        }
      }
    }

    for (const JobTerm& job : jobs_) {
      double g_prefix = 0.0;  // d/d(w_hat) of every earlier part via partial fills
      for (std::size_t q = job.parts.size(); q-- > 0;) {
        const std::size_t order = job.parts[q];
        g_w[order] += g_prefix;
        if (tp.fill_case[order] == 1) {
          g_w[order] += g_wb[order];
        } else if (tp.fill_case[order] == 2) {
          g_prefix -= g_wb[order];
        }
      }
    }
  }

  FPSchedule fps_;
  TaskSet taskset_;
  PowerModel model_;
  std::vector<SubTerm> subs_;
  std::vector<JobTerm> jobs_;
  double ct_slow_ = 0.0;
  double ct_fast_ = 0.0;
};

inline NlpProblem build_nlp(const FPSchedule& fps, const TaskSet& taskset, const PowerModel& model) {
  return NlpProblem(fps, taskset, model);
}

/// Relative violations of (5)-(14) at an arbitrary assignment, computed from
/// the stored variables alone (no closed forms re-derived).
inline ResidualReport constraint_residuals(const NlpProblem& p, const Assignment& a) {
  ResidualReport rep;
  auto note = [&rep](int family_slot, std::size_t where, double lhs, double rhs, double viol) {
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    const double r = std::max(0.0, viol) / scale;
    if (r > rep.by_family[family_slot]) rep.by_family[family_slot] = r;
    if (r > rep.max) {
      rep.max = r;
      rep.worst_family = kConstraintFamilies[family_slot];
      rep.worst_index = where;
    }
  };
  // lhs >= rhs
  auto geq = [&note](int slot, std::size_t where, double lhs, double rhs) { note(slot, where, lhs, rhs, rhs - lhs); };
  auto eq = [&note](int slot, std::size_t where, double lhs, double rhs) {
    note(slot, where, lhs, rhs, std::abs(lhs - rhs));
  };

  const PowerModel& m = p.model();
  auto ct = [&m](double v) { return m.cycle_time(std::clamp(v, m.vmin(), m.vmax())); };
  const std::size_t n = p.size();
  for (std::size_t s = 0; s < n; ++s) {
    const auto& st = p.subs()[s];
    const double te_prev = s > 0 ? a.te[s - 1] : 0.0;
    geq(0, s, a.ts[s], st.release);
    geq(1, s, st.deadline, a.te[s]);
    for (double v : {a.v_bar[s], a.v_hat[s]}) {
      geq(2, s, v, m.vmin());
      geq(2, s, m.vmax(), v);
    }
    eq(3, s, a.te[s], a.ts[s] + a.w_hat[s] * ct(a.v_bar[s]));
    geq(4, s, a.te[s] - std::max(te_prev, st.release), a.w_hat[s] * ct(a.v_hat[s]));
    if (s > 0) {
      const double slack_prev = (a.w_hat[s - 1] - a.w_bar[s - 1]) * ct(a.v_hat[s - 1]);
      geq(5, s, a.ts[s], te_prev - slack_prev);
    }
    geq(8, s, a.w_hat[s], a.w_bar[s]);
    geq(8, s, a.w_bar[s], 0.0);
    geq(8, s, a.w_hat[s], 0.0);
  }
  for (std::size_t j = 0; j < p.jobs().size(); ++j) {
    const auto& job = p.jobs()[j];
    double sum_bar = 0.0;
    double sum_hat = 0.0;
    for (std::size_t order : job.parts) {
      sum_bar += a.w_bar[order];
      sum_hat += a.w_hat[order];
      const double ol = job.acec - sum_bar;
      geq(9, order, a.w_bar[order] * ol, a.w_hat[order] * ol);
    }
    eq(6, job.parts.front(), sum_bar, job.acec);
    eq(7, job.parts.front(), sum_hat, job.wcec);
  }
  return rep;
}

}  // namespace acs
