#pragma once

#include <acs/fps.hpp>
#include <acs/power.hpp>
#include <acs/solver.hpp>
#include <acs/taskmodel.hpp>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace acs {

// Relative slack allowed when comparing finish times against end times and
// deadlines, and required voltages against vmax.
inline constexpr double kTimeTolerance = 1e-9;

inline bool within(double t, double bound) { return t <= bound + kTimeTolerance * std::max(1.0, std::abs(bound)); }

struct WorstCaseReport {
  bool feasible = true;
  double energy = 0.0;
  std::vector<double> start;
  std::vector<double> finish;
  std::vector<double> voltage;
  std::vector<std::string> violations;
};

/// Replays the all-WCEC run against (te, w_hat) with greedy runtime voltages:
/// each fragment starts at max(t, R), runs its whole budget and must fit by te
/// without exceeding vmax.
inline WorstCaseReport verify_worst_case(const StaticSchedule& sched, const FPSchedule& fps,
                                         const TaskSet& taskset, const PowerModel& model) {
  WorstCaseReport rep;
  const std::size_t n = fps.size();
  rep.start.assign(n, 0.0);
  rep.finish.assign(n, 0.0);
  rep.voltage.assign(n, model.vmin());
  if (sched.te.size() != n || sched.w_hat.size() != n) {
    rep.feasible = false;
    rep.violations.push_back("schedule does not cover every sub-instance");
    return rep;
  }
  auto fail = [&rep, &fps](std::size_t s, const std::string& why) {
    rep.feasible = false;
    rep.violations.push_back(to_string(fps[s].id) + ": " + why);
  };
  const double ct_fast = model.fastest_cycle_time();
  double t = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const SubInstance& sub = fps[s];
    const double start = std::max(t, static_cast<double>(sub.release));
    const double w = sched.w_hat[s];
    const double te = sched.te[s];
    rep.start[s] = start;
    rep.finish[s] = start;
    if (w <= 0.0) continue;
    const double d = te - start;
    double v = model.vmax();
    if (d > 0.0) v = voltage_for_duration(model, w, d).volts;
    if (!within(start + w * ct_fast, te)) {
      std::ostringstream os;
      os << "needs more than vmax (" << w << " cycles in " << d << ")";
      fail(s, os.str());
    }
    const double finish = start + w * model.cycle_time(v);
    rep.voltage[s] = v;
    rep.finish[s] = finish;
    rep.energy += energy(taskset.task(sub.id.task).capacitance, w, v);
    if (!within(finish, te)) fail(s, "finishes after its end time");
    if (!within(finish, static_cast<double>(sub.deadline))) fail(s, "misses its deadline");
    t = finish;
  }
  return rep;
}

}  // namespace acs
