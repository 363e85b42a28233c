#pragma once

#include <acs/fps.hpp>
#include <acs/power.hpp>
#include <acs/solver.hpp>
#include <acs/taskmodel.hpp>
#include <acs/verify.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <type_traits>
#include <vector>

namespace acs {

// Truncated normal workload model: mean ACEC, sigma = (WCEC - BCEC) / 6,
// samples clamped to [BCEC, WCEC] and rounded to whole cycles.
class WorkloadSampler {
 public:
  struct Law {
    double mean = 0.0;
    double sigma = 0.0;
    double lo = 0.0;
    double hi = 0.0;
  };

  explicit WorkloadSampler(const TaskSet& ts) {
    for (const Task& t : ts.tasks()) laws_.push_back({t.acec, (t.wcec - t.bcec) / 6.0, t.bcec, t.wcec});
  }

  const Law& law(int task) const { return laws_.at(static_cast<std::size_t>(task - 1)); }

  template <class Rng>
  double sample(int task, Rng& rng) const {
    const Law& l = law(task);
    // Whole cycles inside [lo, hi].
    const double lo = std::ceil(l.lo);
    const double hi = std::floor(l.hi);
    double c = l.mean;
    if (l.sigma > 0.0) {
      std::normal_distribution<double> dist(l.mean, l.sigma);
      c = dist(rng);
    }
    c = std::clamp(std::round(std::clamp(c, l.lo, l.hi)), lo, hi);
    return c;
  }

 private:
  std::vector<Law> laws_;
};

// Stream seed for trial `trial` of a run seeded with `seed`.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct TraceSegment {
  SubId id;
  std::size_t order = 0;
  double start = 0.0;
  double voltage = 0.0;
  double cycles = 0.0;
  double duration = 0.0;
  double energy = 0.0;
};

struct JobOutcome {
  double finish = 0.0;
  bool deadline_met = true;
};

struct Trace {
  std::vector<TraceSegment> segments;
  std::vector<JobOutcome> jobs;  // by FPSchedule job slot
  double total_energy = 0.0;
  int misses = 0;
  int risk_events = 0;  // fragments that needed more than vmax
};

/// One frame of greedy slack reclamation. Fragments run in total order; each
/// starts at max(t, R), picks the lowest voltage that would fit its whole
/// budget w_hat by te, and executes min(remaining, w_hat) cycles. `cycles` is
/// indexed by job slot.
inline Trace run_trial(const StaticSchedule& sched, const FPSchedule& fps, const TaskSet& taskset,
                       const PowerModel& model, std::span<const double> cycles) {
  Trace tr;
  tr.jobs.resize(fps.jobs().size());
  std::vector<double> remaining(cycles.begin(), cycles.end());
  std::vector<std::size_t> parts_left(fps.jobs().size());
  for (std::size_t j = 0; j < fps.jobs().size(); ++j) parts_left[j] = fps.jobs()[j].parts.size();

  double t = 0.0;
  for (std::size_t s = 0; s < fps.size(); ++s) {
    const SubInstance& sub = fps[s];
    const bool last = --parts_left[sub.job] == 0;
    double exec = std::min(remaining[sub.job], sched.w_hat[s]);
    if (last) exec = remaining[sub.job];
    if (!(exec > 0.0)) continue;
    const double start = std::max(t, static_cast<double>(sub.release));
    const double budget = std::max(sched.w_hat[s], exec);
    const double window = sched.te[s] - start;
    double v = model.vmax();
    if (window > 0.0) v = voltage_for_duration(model, budget, window).volts;
    if (!within(start + budget * model.fastest_cycle_time(), sched.te[s])) ++tr.risk_events;
    const double duration = exec * model.cycle_time(v);
    const double e = energy(taskset.task(sub.id.task).capacitance, exec, v);
    tr.segments.push_back({sub.id, s, start, v, exec, duration, e});
    tr.total_energy += e;
    t = start + duration;
    remaining[sub.job] -= exec;
    tr.jobs[sub.job].finish = t;
  }
  for (std::size_t j = 0; j < fps.jobs().size(); ++j) {
    const Job& job = fps.jobs()[j];
    const bool met = within(tr.jobs[j].finish, static_cast<double>(job.instance.deadline));
    tr.jobs[j].deadline_met = met;
    if (!met) ++tr.misses;
  }
  return tr;
}

// Per-job cycles: sampled, or fixed at one of the task's characteristic counts.
enum class CycleMode { Sampled, Acec, Wcec, Bcec };

inline std::vector<double> fixed_cycles(const FPSchedule& fps, const TaskSet& ts, CycleMode mode) {
  std::vector<double> out;
  for (const Job& job : fps.jobs()) {
    const Task& t = ts.task(job.instance.task);
    out.push_back(mode == CycleMode::Acec ? t.acec : mode == CycleMode::Bcec ? t.bcec : t.wcec);
  }
  return out;
}

template <class Rng>
std::vector<double> sample_cycles(const WorkloadSampler& sampler, const FPSchedule& fps, Rng& rng) {
  std::vector<double> out;
  out.reserve(fps.jobs().size());
  for (const Job& job : fps.jobs()) out.push_back(sampler.sample(job.instance.task, rng));
  return out;
}

// Cycles of trial `trial`; identical for every schedule of the same task set.
inline std::vector<double> trial_cycles(const FPSchedule& fps, const TaskSet& ts, std::uint64_t seed,
                                        std::uint64_t trial, CycleMode mode = CycleMode::Sampled) {
  if (mode != CycleMode::Sampled) return fixed_cycles(fps, ts, mode);
  const WorkloadSampler sampler(ts);
  std::mt19937_64 rng(trial_seed(seed, trial));
  return sample_cycles(sampler, fps, rng);
}

struct MonteCarloResult {
  std::uint64_t trials = 0;
  double mean_energy = 0.0;
  double std_energy = 0.0;
  double min_energy = 0.0;
  double max_energy = 0.0;
  long misses = 0;
  long risk_events = 0;
  std::uint64_t seed = 0;
};

// Streaming aggregate of per-trial energies (Welford).
class EnergyStats {
 public:
  void add(const Trace& tr) {
    ++count_;
    const double x = tr.total_energy;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
    lo_ = std::min(lo_, x);
    hi_ = std::max(hi_, x);
    misses_ += tr.misses;
    risks_ += tr.risk_events;
  }

  MonteCarloResult result(std::uint64_t seed) const {
    MonteCarloResult r;
    r.trials = count_;
    r.mean_energy = mean_;
    r.std_energy = count_ > 1 ? std::sqrt(m2_ / static_cast<double>(count_ - 1)) : 0.0;
    r.min_energy = count_ ? lo_ : 0.0;
    r.max_energy = count_ ? hi_ : 0.0;
    r.misses = misses_;
    r.risk_events = risks_;
    r.seed = seed;
    return r;
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
  long misses_ = 0;
  long risks_ = 0;
};

/// `trials` independent frames with cycles drawn per (seed, trial index).
/// Runs against different schedules with the same seed replay the same cycles.
template <class OnTrace = std::nullptr_t>
MonteCarloResult run_monte_carlo(const StaticSchedule& sched, const FPSchedule& fps, const TaskSet& taskset,
                                 const PowerModel& model, std::uint64_t trials, std::uint64_t seed,
                                 CycleMode mode = CycleMode::Sampled, OnTrace on_trace = nullptr) {
  if (trials == 0) throw DomainError("run_monte_carlo: trials must be at least 1");
  EnergyStats stats;
  for (std::uint64_t k = 0; k < trials; ++k) {
    const std::vector<double> cycles = trial_cycles(fps, taskset, seed, k, mode);
    const Trace tr = run_trial(sched, fps, taskset, model, cycles);
    if constexpr (!std::is_same_v<OnTrace, std::nullptr_t>) on_trace(k, tr);
    stats.add(tr);
  }
  return stats.result(seed);
}

}  // namespace acs
