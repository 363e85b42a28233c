#pragma once

#include <acs/fps.hpp>
#include <acs/power.hpp>
#include <acs/solver.hpp>
#include <acs/taskmodel.hpp>

#include <string>
#include <vector>

namespace fixture {

inline acs::Task task(acs::Tick period, double wcec, double acec, double bcec, double c = 1.0) {
  return {0, period, wcec, acec, bcec, c};
}

// Three equal jobs released together, deadlines 10, 15, 20.
inline acs::TaskSet motivational() {
  return acs::TaskSet("motivational", {task(10, 20, 10, 0), task(15, 20, 10, 0), task(20, 20, 10, 0)},
                      acs::FrameMode::SingleRelease);
}

inline acs::PowerModel inverse(double vmax = 5.0) { return acs::PowerModel::inverse_law(1.0, 0.7, vmax); }

inline acs::TaskSet three_period() { return acs::TaskSet("three_period", {task(3, 2, 1.5, 1), task(4, 2, 1.5, 1), task(6, 2, 1.5, 1)}); }

// P = (2, 4), WCEC (4, 6), BCEC = 0.2 WCEC, ACEC midway.
inline acs::TaskSet two_task() {
  return acs::TaskSet("two", {task(2, 4, 2.4, 0.8), task(4, 6, 3.6, 1.2)});
}

inline acs::StaticSchedule fixed_schedule(const acs::FPSchedule& fps, std::vector<double> te, std::vector<double> w_hat) {
  acs::StaticSchedule s;
  s.policy = "fixed";
  s.te = std::move(te);
  s.w_hat = std::move(w_hat);
  const std::size_t n = fps.size();
  s.ts.assign(n, 0.0);
  s.w_bar.assign(n, 0.0);
  s.v_bar.assign(n, 0.0);
  s.v_hat.assign(n, 0.0);
  return s;
}

// Paper listing with the omitted (1,3,1) after (3,1,3).
inline const char* kPreemptedOrder =
    "(1,1,1) (2,1,1) (3,1,1) (1,2,1) (2,1,2) (3,1,2) (2,2,1) (3,1,3) (1,3,1) (2,2,2) (3,2,1) (2,3,1) (3,2,2) "
    "(1,4,1) (2,3,2) (3,2,3)";

}  // namespace fixture
