#pragma once

#include <acs/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace acs {

// Integer time grid for releases, deadlines and periods.
using Tick = std::int64_t;

// A periodic task. Relative deadline equals the period.
struct Task {
  int index = 0;  // 1-based priority rank, lower is higher priority
  Tick period = 0;
  double wcec = 0.0;
  double acec = 0.0;
  double bcec = 0.0;
  double capacitance = 1.0;

  friend bool operator==(const Task&, const Task&) = default;
};

// How jobs are laid out inside one frame.
enum class FrameMode {
  Hyperperiod,    // every task releases L / P_i jobs over the hyper-period L
  SingleRelease,  // every task releases one job at t = 0; the frame is max P_i
};

// Job j of task i occupying the window [release, deadline).
struct TaskInstance {
  int task = 0;
  int instance = 0;
  Tick release = 0;
  Tick deadline = 0;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

/// Least common multiple of the periods.
/// Throws DomainError on empty input, non-positive periods or overflow.
inline Tick hyperperiod(std::span<const Tick> periods) {
  if (periods.empty()) throw DomainError("hyperperiod: empty period list");
  Tick l = 1;
  for (Tick p : periods) {
    if (p <= 0) throw DomainError("hyperperiod: periods must be positive");
    const Tick g = std::gcd(l, p);
    Tick out = 0;
    if (__builtin_mul_overflow(l / g, p, &out)) throw DomainError("hyper-period too large");
    l = out;
  }
  return l;
}

class TaskSet {
 public:
  TaskSet() = default;

  /// Takes tasks in priority order. Indices are reassigned 1..N. The set is
  /// not validated here so that validate_taskset() can report on it.
  TaskSet(std::string name, std::vector<Task> tasks, FrameMode mode = FrameMode::Hyperperiod)
      : name_(std::move(name)), tasks_(std::move(tasks)), mode_(mode) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) tasks_[i].index = static_cast<int>(i + 1);
    frame_ = compute_frame();
  }

  /// Orders tasks rate-monotonically (shorter period first, ties by input order).
  static TaskSet rate_monotonic(std::string name, std::vector<Task> tasks,
                                FrameMode mode = FrameMode::Hyperperiod) {
    std::stable_sort(tasks.begin(), tasks.end(),
                     [](const Task& a, const Task& b) { return a.period < b.period; });
    return TaskSet(std::move(name), std::move(tasks), mode);
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<Task>& tasks() const noexcept { return tasks_; }
  std::size_t size() const noexcept { return tasks_.size(); }
  FrameMode frame_mode() const noexcept { return mode_; }

  // Frame length L: the hyper-period, or max P_i for single-release frames.
  Tick hyper_period() const noexcept { return frame_; }

  // 1-based lookup.
  const Task& task(int index) const { return tasks_.at(static_cast<std::size_t>(index - 1)); }

  // Number of jobs task `index` releases in one frame.
  Tick instance_count(int index) const {
    if (mode_ == FrameMode::SingleRelease) return 1;
    return frame_ / task(index).period;
  }

  /// Copy with every ACEC replaced by the WCEC (the worst-case-only view).
  TaskSet with_worst_case_average() const {
    TaskSet out = *this;
    for (Task& t : out.tasks_) t.acec = t.wcec;
    return out;
  }

  friend bool operator==(const TaskSet&, const TaskSet&) = default;

 private:
  Tick compute_frame() const {
    std::vector<Tick> periods;
    for (const Task& t : tasks_) {
      if (t.period <= 0) return 0;
      periods.push_back(t.period);
    }
    if (periods.empty()) return 0;
    if (mode_ == FrameMode::SingleRelease) return *std::max_element(periods.begin(), periods.end());
    return hyperperiod(periods);
  }

  std::string name_;
  std::vector<Task> tasks_;
  FrameMode mode_ = FrameMode::Hyperperiod;
  Tick frame_ = 0;
};

/// Lists every violated invariant. Empty iff the set is valid.
inline std::vector<std::string> validate_taskset(const TaskSet& ts) {
  std::vector<std::string> report;
  auto add = [&report](const std::string& s) { report.push_back(s); };
  if (ts.size() == 0) add("task set is empty");
  for (const Task& t : ts.tasks()) {
    const std::string who = "task " + std::to_string(t.index);
    if (t.period <= 0) add(who + ": period must be positive");
    if (!(t.wcec > 0.0) || std::floor(t.wcec) != t.wcec)
      add(who + ": wcec must be a positive integer");
    if (!(t.bcec >= 0.0)) add(who + ": bcec must be non-negative");
    if (t.bcec > t.acec) add(who + ": bcec exceeds acec");
    if (t.acec > t.wcec) add(who + ": acec exceeds wcec");
    if (!(t.capacitance > 0.0)) add(who + ": capacitance must be positive");
  }
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const Task& prev = ts.tasks()[i - 1];
    const Task& cur = ts.tasks()[i];
    if (cur.period < prev.period) {
      std::ostringstream os;
      os << "priority ordering: task " << cur.index << " (period " << cur.period
         << ") has a shorter period than higher-priority task " << prev.index << " (period "
         << prev.period << ")";
      add(os.str());
    }
  }
  if (ts.size() > 0 && ts.hyper_period() <= 0) add("frame length is not positive");
  return report;
}

/// All jobs of one frame sorted by (release, priority).
inline std::vector<TaskInstance> expand_instances(const TaskSet& ts) {
  std::vector<TaskInstance> out;
  for (const Task& t : ts.tasks()) {
    const Tick count = ts.instance_count(t.index);
    for (Tick j = 0; j < count; ++j) {
      out.push_back({t.index, static_cast<int>(j + 1), j * t.period, (j + 1) * t.period});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TaskInstance& a, const TaskInstance& b) {
    if (a.release != b.release) return a.release < b.release;
    return a.task < b.task;
  });
  return out;
}

}  // namespace acs
