#pragma once

#include <acs/error.hpp>
#include <acs/fps.hpp>
#include <acs/nlp.hpp>
#include <acs/power.hpp>
#include <acs/solver.hpp>
#include <acs/taskmodel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace acs {

struct GenSpec {
  int tasks = 5;
  double ratio = 0.5;         // BCEC / WCEC
  double utilization = 0.7;   // at vmax, worst case
  Tick period_min = 10;
  Tick period_max = 100;
  std::size_t max_subinstances = kDefaultSubInstanceCap;
  double capacitance = 1.0;
  std::uint64_t seed = 1;
  int max_attempts = 5000;  // whole-set redraws
};

inline void validate_genspec(const GenSpec& g) {
  if (g.tasks < 1) throw DomainError("task count must be at least 1");
  if (!(g.ratio > 0.0 && g.ratio <= 1.0)) throw DomainError("bcec/wcec ratio must be in (0, 1]");
  if (!(g.utilization > 0.0 && g.utilization < 1.0)) throw DomainError("utilization must be in (0, 1)");
  if (g.period_min < 1 || g.period_max < g.period_min) throw DomainError("period range must satisfy 1 <= min <= max");
  if (g.max_subinstances < 1) throw DomainError("sub-instance cap must be at least 1");
  if (!(g.capacitance > 0.0)) throw DomainError("capacitance must be positive");
  if (g.max_attempts < 1) throw DomainError("retry budget must be at least 1");
}

namespace detail {

inline std::vector<Task> placeholder_tasks(const std::vector<Tick>& periods) {
  std::vector<Task> tasks;
  for (Tick p : periods) tasks.push_back({0, p, 1.0, 1.0, 1.0, 1.0});
  return tasks;
}

inline bool within_cap(const std::vector<Tick>& periods, std::size_t cap) {
  Tick h = 1;
  try {
    h = hyperperiod(periods);
  } catch (const Error&) {
    return false;
  }
  Tick jobs = 0;
  for (Tick p : periods) jobs += h / p;
  if (static_cast<std::size_t>(jobs) > cap) return false;
  const TaskSet ts = TaskSet::rate_monotonic("", placeholder_tasks(periods));
  return count_subinstances(ts, cap) <= cap;
}

inline double worst_utilization(const std::vector<Task>& tasks, double ct) {
  double u = 0.0;
  for (const Task& t : tasks) u += t.wcec * ct / static_cast<double>(t.period);
  return u;
}

}  // namespace detail

/// Random rate-monotonic task set: periods uniform in the range (a draw that
/// would push the expansion over the cap is redrawn among the periods that do not), WCEC scaled to the target utilization
/// at vmax, BCEC = ratio * WCEC, ACEC midway.
inline TaskSet generate_taskset(const GenSpec& g, const PowerModel& model) {
  validate_genspec(g);
  std::mt19937_64 rng(g.seed);
  std::uniform_int_distribution<Tick> period_dist(g.period_min, g.period_max);
  std::uniform_real_distribution<double> weight_dist(0.0, 1.0);
  const double ct = model.fastest_cycle_time();
  int cap_failures = 0;
  int util_failures = 0;
  int sched_failures = 0;

  for (int attempt = 0; attempt < g.max_attempts; ++attempt) {
    std::vector<Tick> periods;
    bool ok = true;
    for (int i = 0; i < g.tasks && ok; ++i) {
      const Tick first = period_dist(rng);
      periods.push_back(first);
      if (detail::within_cap(periods, g.max_subinstances)) continue;
      periods.pop_back();
      // Redraw uniformly among the periods that keep the expansion under the cap.
      std::vector<Tick> admissible;
      for (Tick p = g.period_min; p <= g.period_max; ++p) {
        periods.push_back(p);
        if (detail::within_cap(periods, g.max_subinstances)) admissible.push_back(p);
        periods.pop_back();
      }
      if (admissible.empty()) {
        ok = false;
        break;
      }
      std::uniform_int_distribution<std::size_t> pick(0, admissible.size() - 1);
      periods.push_back(admissible[pick(rng)]);
    }
    if (!ok) {
      ++cap_failures;
      continue;
    }
    std::stable_sort(periods.begin(), periods.end());

    std::vector<double> weights(periods.size());
    double total = 0.0;
    for (double& w : weights) {
      w = 1.0 - weight_dist(rng);
      total += w;
    }
    std::vector<Task> tasks(periods.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const double share = g.utilization * weights[i] / total;
      tasks[i].period = periods[i];
      tasks[i].wcec = std::max(1.0, std::round(share * static_cast<double>(periods[i]) / ct));
    }
    std::size_t big = 0;
    for (std::size_t i = 1; i < tasks.size(); ++i)
      if (tasks[i].period >= tasks[big].period) big = i;
    double others = detail::worst_utilization(tasks, ct) - tasks[big].wcec * ct / static_cast<double>(tasks[big].period);
    tasks[big].wcec = std::max(1.0, std::round((g.utilization - others) * static_cast<double>(tasks[big].period) / ct));
    if (std::abs(detail::worst_utilization(tasks, ct) - g.utilization) > 0.01) {
      ++util_failures;
      continue;
    }
    for (Task& t : tasks) {
      t.bcec = g.ratio * t.wcec;
      t.acec = 0.5 * (t.bcec + t.wcec);
      t.capacitance = g.capacitance;
    }
    TaskSet ts("gen-n" + std::to_string(g.tasks) + "-s" + std::to_string(g.seed), std::move(tasks));
    const FPSchedule fps = build_fps(ts, g.max_subinstances);
    if (!vmax_witness(build_nlp(fps, ts, model)).schedulable) {
      ++sched_failures;
      continue;
    }
    return ts;
  }
  std::string binding = "sub-instance cap " + std::to_string(g.max_subinstances);
  int worst = cap_failures;
  if (util_failures > worst) {
    binding = "utilization target within 0.01";
    worst = util_failures;
  }
  if (sched_failures > worst) binding = "schedulability at vmax";
  throw GenerationError("retry budget exhausted after " + std::to_string(g.max_attempts) +
                        " attempts; binding constraint: " + binding + " (cap " + std::to_string(cap_failures) +
                        ", utilization " + std::to_string(util_failures) + ", vmax " +
                        std::to_string(sched_failures) + ")");
}

}  // namespace acs
