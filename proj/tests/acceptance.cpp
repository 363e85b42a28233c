// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Lines are also written to acceptance_results.txt in the working directory.

#include <acs/acs.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace acs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream g_log;
bool g_all = true;

void report(int id, bool ok, const std::string& detail) {
  std::ostringstream os;
  os << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail;
  std::cout << os.str() << std::endl;
  g_log << os.str() << std::endl;
  g_all = g_all && ok;
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

SolverOptions bulk_solver(std::uint64_t seed) {
  SolverOptions o;
  o.starts = 2;
  o.max_outer = 10;
  o.max_inner = 1000;
  o.stationarity_tol = 1e-6;
  o.seed = seed;
  return o;
}

// The schedule as emitted, not recomputed.
Assignment emitted(const StaticSchedule& s, const TaskSet& ts) {
  Assignment a{s.ts, s.te, s.w_bar, s.w_hat, s.v_bar, s.v_hat, s.objective};
  (void)ts;
  return a;
}

void criterion1() {
  const TaskSet ts = fixture::three_period();
  const auto t0 = Clock::now();
  const FPSchedule fps = build_fps(ts);
  const double dt = seconds_since(t0);
  std::string order;
  for (const auto& s : fps) order += (order.empty() ? "" : " ") + to_string(s.id);
  const bool ok = fps.size() == 16 && order == fixture::kPreemptedOrder && dt < 1e-3;
  report(1, ok, std::to_string(fps.size()) + " sub-instances, order " + (order == fixture::kPreemptedOrder ? "matches" : "differs: " + order) +
                    ", build " + fmt(dt * 1e6, 4) + " us");
}

void criterion2() {
  const TaskSet ts = fixture::motivational();
  const FPSchedule fps = build_fps(ts);
  const PowerModel m5 = fixture::inverse(5.0);
  const std::vector<double> budget{20, 20, 20};
  const StaticSchedule hand = fixture::fixed_schedule(fps, {10, 15, 20}, budget);
  const StaticSchedule wcs = fixture::fixed_schedule(fps, {20.0 / 3, 40.0 / 3, 20}, budget);
  const auto acec = fixed_cycles(fps, ts, CycleMode::Acec);
  const auto wcec = fixed_cycles(fps, ts, CycleMode::Wcec);

  const Trace a = run_trial(hand, fps, ts, m5, acec);
  const Trace b = run_trial(hand, fps, ts, m5, wcec);
  const WorstCaseReport c = verify_worst_case(hand, fps, ts, fixture::inverse(3.3));
  const Trace d = run_trial(wcs, fps, ts, m5, acec);
  const Trace e = run_trial(wcs, fps, ts, m5, wcec);

  const bool ok_a = std::abs(a.total_energy - 120.0) <= 0.5;
  const bool ok_b = std::abs(b.total_energy - 720.0) <= 0.5 && b.misses == 0;
  const bool ok_c = !c.feasible;
  const bool ok_d = std::abs(d.total_energy - 159.2) <= 0.01 * 159.2;
  const bool ok_e = std::abs(e.total_energy - 540.0) <= 0.01 * 540.0;
  report(2, ok_a && ok_b && ok_c && ok_d && ok_e,
         "a " + fmt(a.total_energy) + " uJ, b " + fmt(b.total_energy) + " uJ / " + std::to_string(b.misses) +
             " misses, c " + (c.feasible ? "feasible" : "infeasible") + " at 3.3 V, d " + fmt(d.total_energy) +
             " uJ, e " + fmt(e.total_energy) + " uJ");
}

void criterion3() {
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    TaskSet ts;
  };
  std::vector<Case> cases{{"motivational", fixture::motivational()}, {"P=(2,4)", fixture::two_task()}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const PowerModel m = fixture::inverse();
    const FPSchedule fps = build_fps(c.ts);
    const StaticSchedule s = solve_acs(build_nlp(fps, c.ts, m));
    const double grid = oracle::grid_minimum(fps, c.ts, m, 0.05);
    const bool pass = s.objective <= grid + 1e-3;
    ok = ok && pass;
    detail += std::string(c.name) + " solver " + fmt(s.objective, 8) + " vs grid " + fmt(grid, 8) + "; ";
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 60.0;
  report(3, ok, detail + "runtime " + fmt(dt, 3) + " s");
}

// Criteria 4 and 5 share one pool of generated sets.
void criteria4and5() {
  const auto t0 = Clock::now();
  const PowerModel model;
  const std::vector<double> ratios{0.1, 0.5, 0.9};
  const int kSets = 50;
  const std::uint64_t kTrials = 2000;
  double worst_residual = 0.0;
  std::string worst_where;
  long acs_misses = 0, wcs_misses = 0;
  std::uint64_t trials = 0;
  int failures = 0;
  std::string failure_detail;
  for (int k = 0; k < kSets; ++k) {
    GenSpec g;
    g.tasks = 2 + k % 9;
    g.ratio = ratios[(k / 9) % 3];
    g.seed = 1000 + static_cast<std::uint64_t>(k);
    try {
      const TaskSet ts = generate_taskset(g, model);
      const SetOutcome out = evaluate_set(ts, model, bulk_solver(g.seed), kTrials, trial_seed(g.seed, 1));
      if (!out.ok) {
        ++failures;
        failure_detail += " set " + std::to_string(k) + ": " + out.error;
        continue;
      }
      const FPSchedule fps = build_fps(ts);
      const oracle::Residuals ra = oracle::residuals(fps, ts, model, emitted(out.acs, ts));
      const TaskSet worst = ts.with_worst_case_average();
      const oracle::Residuals rw = oracle::residuals(fps, worst, model, emitted(out.wcs, worst));
      for (const auto& [r, who] : {std::pair{ra, "acs"}, std::pair{rw, "wcs"}}) {
        if (r.max > worst_residual) {
          worst_residual = r.max;
          worst_where = std::string(who) + " set " + std::to_string(k) + " family (" + std::to_string(r.family) + ")";
        }
      }
      acs_misses += out.acs_misses;
      wcs_misses += out.wcs_misses;
      trials += kTrials + 1;
    } catch (const Error& e) {
      ++failures;
      failure_detail += " set " + std::to_string(k) + ": " + e.what();
    }
  }
  const double dt = seconds_since(t0);
  report(4, failures == 0 && worst_residual <= 1e-6,
         std::to_string(kSets - failures) + "/" + std::to_string(kSets) + " sets solved, worst relative residual " +
             fmt(worst_residual, 3) + (worst_where.empty() ? "" : " (" + worst_where + ")") + failure_detail);
  report(5, failures == 0 && acs_misses == 0 && wcs_misses == 0 && trials >= 100000,
         std::to_string(trials) + " trials per policy over " + std::to_string(kSets - failures) +
             " sets (forced all-WCEC frame included), misses acs " + std::to_string(acs_misses) + " wcs " +
             std::to_string(wcs_misses) + ", runtime " + fmt(dt, 4) + " s");
}

void criterion6() {
  const auto t0 = Clock::now();
  ExperimentPlan plan;
  plan.cells.clear();
  for (int n : {3, 5, 10})
    for (double r : {0.1, 0.5, 0.9}) plan.cells.push_back({n, r});
  plan.sets = 10;
  plan.trials = 200;
  plan.seed = 6;
  plan.solver = bulk_solver(6);
  const ExperimentReport rep = run_experiment(plan);
  bool ok = true;
  std::string detail;
  for (int n : {3, 5, 10}) {
    double at01 = 0, at09 = 0;
    for (const auto& c : rep.cells) {
      if (c.cell.n_tasks != n) continue;
      ok = ok && c.improvement_pct >= 0.0 && c.failures == 0 && c.misses == 0;
      if (c.cell.ratio == 0.1) at01 = c.improvement_pct;
      if (c.cell.ratio == 0.9) at09 = c.improvement_pct;
      detail += "N=" + std::to_string(n) + "/r=" + fmt(c.cell.ratio, 2) + " " + fmt(c.improvement_pct, 4) + "% ";
    }
    ok = ok && at01 > at09;
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 1800.0;
  report(6, ok, detail + "runtime " + fmt(dt, 4) + " s");
}

void criterion7() {
  const bool fixed = average_fill(15, std::vector<double>{10, 10, 10}) == std::vector<double>{10, 5, 0};
  std::mt19937_64 rng(7);
  int bad = 0;
  for (int c = 0; c < 1000; ++c) {
    const int parts = std::uniform_int_distribution<int>(1, 10)(rng);
    std::vector<double> w_hat(parts);
    double total = 0.0;
    for (double& w : w_hat) total += (w = std::uniform_int_distribution<int>(0, 100)(rng));
    const double acec = std::uniform_int_distribution<int>(0, static_cast<int>(total))(rng);
    const auto w = average_fill(acec, w_hat);
    double sum = 0.0;
    bool good = true;
    for (int k = 0; k < parts; ++k) {
      sum += w[k];
      const double ol = acec - sum;
      good = good && w[k] <= w_hat[k] && w[k] * ol >= w_hat[k] * ol;
    }
    good = good && sum == acec;
    bad += !good;
  }
  report(7, fixed && bad == 0, "case [10,5,0] " + std::string(fixed ? "ok" : "wrong") + ", " + std::to_string(1000 - bad) +
                    "/1000 random cases exact");
}

void criterion8() {
  std::mt19937_64 rng(8);
  double worst_v = 0.0;
  for (const PowerModel& m : {PowerModel::inverse_law(1.0, 0.7, 5.0), PowerModel{}, PowerModel::alpha_law(1.0, 0.5, 1.5, 0.9, 5.0)}) {
    std::uniform_real_distribution<double> v(m.vmin(), m.vmax()), w(1.0, 1e4);
    for (int i = 0; i < 10000; ++i) {
      const double volts = v(rng), cycles = w(rng);
      const VoltageChoice c = voltage_for_duration(m, cycles, exec_time(m, cycles, volts));
      worst_v = std::max(worst_v, std::abs(c.volts - volts) / volts);
    }
  }
  double worst_g = 0.0;
  GenSpec g;
  g.tasks = 4;
  g.seed = 8;
  for (const PowerModel& m : {PowerModel{}, PowerModel::alpha_law(1.0, 0.5, 1.5, 0.9, 5.0)}) {
    const TaskSet ts = generate_taskset(g, m);
    const NlpProblem p = build_nlp(build_fps(ts), ts, m);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> te(p.size()), w(p.size()), gte(p.size()), gw(p.size());
      for (const auto& job : p.jobs()) {
        double sum = 0.0;
        for (auto s : job.parts) sum += (w[s] = u(rng));
        for (auto s : job.parts) w[s] *= job.wcec / sum;
      }
      for (std::size_t s = 0; s < p.size(); ++s)
        te[s] = p.subs()[s].release + u(rng) * (p.subs()[s].deadline - p.subs()[s].release);
      p.objective_gradient(te, w, gte, gw);
      double scale = 1.0;
      for (std::size_t s = 0; s < p.size(); ++s) scale = std::max({scale, std::abs(gte[s]), std::abs(gw[s])});
      auto fd = [&](std::vector<double>& x, std::size_t s) {
        const double h = 1e-7 * std::max(1.0, std::abs(x[s]));
        const double keep = x[s];
        x[s] = keep + h;
        const double fp = p.objective(te, w);
        x[s] = keep - h;
        const double fm = p.objective(te, w);
        x[s] = keep;
        return (fp - fm) / (2 * h);
      };
      for (std::size_t s = 0; s < p.size(); ++s) {
        worst_g = std::max(worst_g, std::abs(fd(te, s) - gte[s]) / scale);
        worst_g = std::max(worst_g, std::abs(fd(w, s) - gw[s]) / scale);
      }
    }
  }
  report(8, worst_v <= 1e-9 && worst_g <= 1e-4,
         "voltage round trip worst " + fmt(worst_v, 3) + " over 3x10^4 pairs, gradient vs finite differences worst " +
             fmt(worst_g, 3));
}

}  // namespace

int main(int argc, char** argv) {
  g_log.open(argc > 1 ? argv[1] : "acceptance_results.txt");
  const auto t0 = Clock::now();
  try {
    criterion1();
    criterion2();
    criterion3();
    criteria4and5();
    criterion6();
    criterion7();
    criterion8();
  } catch (const std::exception& e) {
    std::cout << "FAIL aborted: " << e.what() << std::endl;
    g_log << "FAIL aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << "total " << fmt(seconds_since(t0), 4) << " s" << std::endl;
  return g_all ? 0 : 1;
}
