#pragma once

#include <acs/error.hpp>
#include <acs/taskmodel.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace acs {

// Identity (i, j, k) of a sub-instance: task, job, fragment. All 1-based.
struct SubId {
  int task = 0;
  int instance = 0;
  int part = 0;

  friend auto operator<=>(const SubId&, const SubId&) = default;
};

inline std::string to_string(const SubId& id) {
  return "(" + std::to_string(id.task) + "," + std::to_string(id.instance) + "," +
         std::to_string(id.part) + ")";
}

// One preemption-delimited fragment of a job.
struct SubInstance {
  SubId id;
  Tick seg_start = 0;
  Tick seg_end = 0;
  Tick release = 0;   // parent job release
  Tick deadline = 0;  // parent job deadline
  std::size_t order = 0;
  std::size_t job = 0;  // index into FPSchedule::jobs()
};

// A job together with its fragments, listed by order index.
struct Job {
  TaskInstance instance;
  std::vector<std::size_t> parts;
};

inline constexpr std::size_t kDefaultSubInstanceCap = 1000;

// The fully preemptive schedule: every possible sub-instance in total order.
class FPSchedule {
 public:
  FPSchedule() = default;

  std::size_t size() const noexcept { return subs_.size(); }
  const SubInstance& operator[](std::size_t order) const { return subs_[order]; }
  const std::vector<SubInstance>& subs() const noexcept { return subs_; }
  const std::vector<Job>& jobs() const noexcept { return jobs_; }
  auto begin() const noexcept { return subs_.begin(); }
  auto end() const noexcept { return subs_.end(); }

  std::optional<std::size_t> find(const SubId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t at(const SubId& id) const {
    auto hit = find(id);
    if (!hit) throw DomainError("unknown sub-instance " + to_string(id));
    return *hit;
  }

  // Job slot of (task, instance), or nullopt.
  std::optional<std::size_t> find_job(int task, int instance) const {
    auto hit = find(SubId{task, instance, 1});
    if (!hit) return std::nullopt;
    return subs_[*hit].job;
  }

 private:
  friend FPSchedule build_fps_from_instances(std::span<const TaskInstance> jobs, std::size_t cap);

  std::vector<SubInstance> subs_;
  std::vector<Job> jobs_;
  std::map<SubId, std::size_t> index_;
};

namespace detail {

// Distinct release times of tasks with priority index < `task`, strictly
// inside (lo, hi).
inline std::vector<Tick> split_points(std::span<const TaskInstance> jobs, int task, Tick lo, Tick hi) {
  std::vector<Tick> cuts;
  for (const TaskInstance& other : jobs) {
    if (other.task < task && other.release > lo && other.release < hi) cuts.push_back(other.release);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace detail

/// Splits every job at the releases of strictly higher-priority tasks inside its
/// window and orders fragments by (segment start, priority, job index).
inline FPSchedule build_fps_from_instances(std::span<const TaskInstance> jobs,
                                           std::size_t cap = kDefaultSubInstanceCap) {
  if (jobs.size() > cap) {
    std::ostringstream os;
    os << "fully preemptive schedule exceeds the cap of " << cap << " sub-instances";
    throw CapacityError(os.str());
  }
  FPSchedule fps;
  for (const TaskInstance& job : jobs) {
    const std::vector<Tick> cuts = detail::split_points(jobs, job.task, job.release, job.deadline);
    Tick start = job.release;
    int part = 1;
    for (std::size_t c = 0; c <= cuts.size(); ++c) {
      const Tick stop = c < cuts.size() ? cuts[c] : job.deadline;
      fps.subs_.push_back({SubId{job.task, job.instance, part++}, start, stop, job.release,
                           job.deadline, 0, 0});
      start = stop;
      if (fps.subs_.size() > cap) {
        std::ostringstream os;
        os << "fully preemptive schedule exceeds the cap of " << cap << " sub-instances";
        throw CapacityError(os.str());
      }
    }
  }
  std::sort(fps.subs_.begin(), fps.subs_.end(), [](const SubInstance& a, const SubInstance& b) {
    if (a.seg_start != b.seg_start) return a.seg_start < b.seg_start;
    if (a.id.task != b.id.task) return a.id.task < b.id.task;
    return a.id.instance < b.id.instance;
  });

  std::map<std::pair<int, int>, std::size_t> job_slot;
  for (std::size_t n = 0; n < fps.subs_.size(); ++n) {
    SubInstance& s = fps.subs_[n];
    s.order = n;
    auto key = std::make_pair(s.id.task, s.id.instance);
    auto [it, fresh] = job_slot.try_emplace(key, fps.jobs_.size());
    if (fresh) fps.jobs_.push_back(Job{TaskInstance{s.id.task, s.id.instance, s.release, s.deadline}, {}});
    s.job = it->second;
    fps.jobs_[s.job].parts.push_back(n);
    fps.index_.emplace(s.id, n);
  }
  return fps;
}

inline FPSchedule build_fps(const TaskSet& ts, std::size_t cap = kDefaultSubInstanceCap) {
  const std::vector<TaskInstance> jobs = expand_instances(ts);
  return build_fps_from_instances(jobs, cap);
}

/// Sub-instance count of the expansion without materializing it. Counting
/// stops early once the total is known to exceed `limit`.
inline std::size_t count_subinstances(const TaskSet& ts, std::size_t limit = SIZE_MAX) {
  std::size_t job_total = 0;
  for (const Task& t : ts.tasks()) {
    job_total += static_cast<std::size_t>(ts.instance_count(t.index));
    if (job_total > limit) return job_total;
  }
  const std::vector<TaskInstance> jobs = expand_instances(ts);
  // Releases of tasks 1..i-1, merged progressively.
  std::vector<Tick> higher;
  std::size_t total = 0;
  for (const Task& t : ts.tasks()) {
    for (const TaskInstance& job : jobs) {
      if (job.task != t.index) continue;
      auto lo = std::upper_bound(higher.begin(), higher.end(), job.release);
      auto hi = std::lower_bound(higher.begin(), higher.end(), job.deadline);
      total += 1 + static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, hi - lo));
    }
    if (total > limit) return total;
    for (const TaskInstance& job : jobs)
      if (job.task == t.index) higher.push_back(job.release);
    std::sort(higher.begin(), higher.end());
    higher.erase(std::unique(higher.begin(), higher.end()), higher.end());
  }
  return total;
}

/// Sub-instance immediately before `id` in total order; nullopt for the first.
inline std::optional<SubInstance> predecessor(const FPSchedule& fps, const SubId& id) {
  const std::size_t n = fps.at(id);
  if (n == 0) return std::nullopt;
  return fps[n - 1];
}

/// One line per sub-instance: "(i,j,k) seg=[a,b) R=r, D=d, order=n".
inline std::string dump(const FPSchedule& fps) {
  std::ostringstream os;
  for (const SubInstance& s : fps) {
    os << to_string(s.id) << " seg=[" << s.seg_start << "," << s.seg_end << ") R=" << s.release
       << ", D=" << s.deadline << ", order=" << s.order << "\n";
  }
  return os.str();
}

}  // namespace acs
