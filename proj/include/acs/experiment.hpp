#pragma once

#include <acs/benchgen.hpp>
#include <acs/error.hpp>
#include <acs/fps.hpp>
#include <acs/io.hpp>
#include <acs/power.hpp>
#include <acs/simulator.hpp>
#include <acs/solver.hpp>
#include <acs/verify.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace acs {

struct ExperimentCell {
  int n_tasks = 5;
  double ratio = 0.5;
};

struct ExperimentPlan {
  std::vector<ExperimentCell> cells;
  int sets = 100;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  double utilization = 0.7;
  Tick period_min = 10;
  Tick period_max = 100;
  std::size_t max_subinstances = kDefaultSubInstanceCap;
  PowerModel power;
  SolverOptions solver;
};

inline void validate_plan(const ExperimentPlan& p) {
  if (p.cells.empty()) throw DomainError("plan has no cells");
  if (p.sets < 1) throw DomainError("sets per cell must be at least 1");
  if (p.trials < 1) throw DomainError("trials per set must be at least 1");
  for (const auto& c : p.cells) {
    GenSpec g;
    g.tasks = c.n_tasks;
    g.ratio = c.ratio;
    g.utilization = p.utilization;
    g.period_min = p.period_min;
    g.period_max = p.period_max;
    g.max_subinstances = p.max_subinstances;
    validate_genspec(g);
  }
}

/// Plan file: either "cells": [{n_tasks, ratio}] or the grid "n_tasks" x "ratios".
inline ExperimentPlan plan_from_json(const Json& j) {
  detail::Fields f(j, "", {"cells", "n_tasks", "ratios", "sets", "trials", "seed", "utilization", "period_min",
                           "period_max", "max_subinstances", "power_model", "solver"});
  ExperimentPlan p;
  if (f.has("cells")) {
    const Json& arr = f.raw("cells");
    if (!arr.is_array()) throw ParseError("field \"cells\" must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      detail::Fields c(arr[i], "cells[" + std::to_string(i) + "]", {"n_tasks", "ratio"});
      p.cells.push_back({static_cast<int>(c.integer("n_tasks")), c.number("ratio")});
    }
  }
  if (f.has("n_tasks") || f.has("ratios")) {
    const Json& ns = f.raw("n_tasks");
    const Json& rs = f.raw("ratios");
    if (!ns.is_array() || !rs.is_array()) throw ParseError("fields \"n_tasks\" and \"ratios\" must be arrays");
    for (const Json& n : ns) {
      if (!n.is_number_integer()) throw ParseError("field \"n_tasks\" must hold integers");
      for (const Json& r : rs) {
        if (!r.is_number()) throw ParseError("field \"ratios\" must hold numbers");
        p.cells.push_back({n.get<int>(), r.get<double>()});
      }
    }
  }
  if (f.has("sets")) p.sets = static_cast<int>(f.integer("sets"));
  if (f.has("trials")) p.trials = static_cast<std::uint64_t>(f.integer("trials"));
  if (f.has("seed")) p.seed = static_cast<std::uint64_t>(f.integer("seed"));
  p.utilization = f.number("utilization", p.utilization);
  if (f.has("period_min")) p.period_min = f.integer("period_min");
  if (f.has("period_max")) p.period_max = f.integer("period_max");
  if (f.has("max_subinstances")) p.max_subinstances = static_cast<std::size_t>(f.integer("max_subinstances"));
  if (f.has("power_model")) p.power = power_from_json(f.raw("power_model"));
  if (f.has("solver")) {
    detail::Fields s(f.raw("solver"), "solver", {"starts", "max_outer", "max_inner", "stationarity_tol"});
    if (s.has("starts")) p.solver.starts = static_cast<int>(s.integer("starts"));
    if (s.has("max_outer")) p.solver.max_outer = static_cast<int>(s.integer("max_outer"));
    if (s.has("max_inner")) p.solver.max_inner = static_cast<int>(s.integer("max_inner"));
    p.solver.stationarity_tol = s.number("stationarity_tol", p.solver.stationarity_tol);
  }
  try {
    validate_plan(p);
  } catch (const DomainError& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  return p;
}

inline ExperimentPlan load_plan(const std::string& path) {
  return plan_from_json(detail::parse_json(detail::read_file(path), path));
}

// Everything measured on one task set.
struct SetOutcome {
  bool ok = false;
  std::string error;
  std::uint64_t seed = 0;
  std::size_t subinstances = 0;
  double acs_mean = 0.0;
  double wcs_mean = 0.0;
  long acs_misses = 0;  // sampled trials plus the forced all-WCEC frame
  long wcs_misses = 0;
  StaticSchedule acs;
  StaticSchedule wcs;
};

/// WCS, then ACS warm-started from it; both verified, then replayed on the
/// same sampled cycles and once with every job at WCEC.
inline SetOutcome evaluate_set(const TaskSet& ts, const PowerModel& model, const SolverOptions& solver,
                               std::uint64_t trials, std::uint64_t sim_seed, std::size_t cap = kDefaultSubInstanceCap) {
  SetOutcome out;
  out.seed = sim_seed;
  try {
    const FPSchedule fps = build_fps(ts, cap);
    out.subinstances = fps.size();
    out.wcs = solve_wcs(fps, ts, model, solver);
    SolverOptions warm = solver;
    warm.warm_starts.push_back({out.wcs.te, out.wcs.w_hat});
    out.acs = solve_acs(build_nlp(fps, ts, model), warm);
    for (const StaticSchedule* s : {&out.wcs, &out.acs}) {
      const WorstCaseReport rep = verify_worst_case(*s, fps, ts, model);
      if (!rep.feasible) throw InfeasibleError(s->policy + " schedule fails worst-case verification", rep.violations.front());
    }
    const MonteCarloResult a = run_monte_carlo(out.acs, fps, ts, model, trials, sim_seed);
    const MonteCarloResult w = run_monte_carlo(out.wcs, fps, ts, model, trials, sim_seed);
    const auto worst = fixed_cycles(fps, ts, CycleMode::Wcec);
    out.acs_mean = a.mean_energy;
    out.wcs_mean = w.mean_energy;
    out.acs_misses = a.misses + run_trial(out.acs, fps, ts, model, worst).misses;
    out.wcs_misses = w.misses + run_trial(out.wcs, fps, ts, model, worst).misses;
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

struct CellReport {
  ExperimentCell cell;
  int sets = 0;
  int solved = 0;
  std::uint64_t trials = 0;
  double acs_mean = 0.0;
  double wcs_mean = 0.0;
  double improvement_pct = 0.0;  // (wcs - acs) / wcs * 100 over solved sets
  long misses = 0;
  int failures = 0;
  std::vector<std::string> errors;
};

struct ExperimentReport {
  std::vector<CellReport> cells;
  std::uint64_t seed = 0;
  std::string plan_hash;

  bool all_failed() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellReport& c) { return c.solved == 0; });
  }
  long total_misses() const {
    long m = 0;
    for (const auto& c : cells) m += c.misses;
    return m;
  }
};

// Generator seed of set k in cells with n tasks. Cells that differ only in
// ratio share periods and WCECs.
inline std::uint64_t set_seed(std::uint64_t plan_seed, int n_tasks, int k) {
  return trial_seed(trial_seed(plan_seed, static_cast<std::uint64_t>(n_tasks)), static_cast<std::uint64_t>(k));
}

inline SetOutcome run_experiment_set(const ExperimentPlan& plan, const ExperimentCell& cell, int k) {
  GenSpec g;
  g.tasks = cell.n_tasks;
  g.ratio = cell.ratio;
  g.utilization = plan.utilization;
  g.period_min = plan.period_min;
  g.period_max = plan.period_max;
  g.max_subinstances = plan.max_subinstances;
  g.seed = set_seed(plan.seed, cell.n_tasks, k);
  SolverOptions solver = plan.solver;
  solver.seed = g.seed;
  try {
    const TaskSet ts = generate_taskset(g, plan.power);
    SetOutcome r = evaluate_set(ts, plan.power, solver, plan.trials, trial_seed(g.seed, 0x5eedULL), plan.max_subinstances);
    r.acs = {};
    r.wcs = {};
    return r;
  } catch (const Error& e) {
    SetOutcome r;
    r.error = e.what();
    return r;
  }
}

/// Sets run on up to `threads` workers; the report is merged in plan order.
inline ExperimentReport run_experiment(const ExperimentPlan& plan, unsigned threads = 1) {
  validate_plan(plan);
  const std::size_t per = static_cast<std::size_t>(plan.sets);
  const std::size_t total = plan.cells.size() * per;
  std::vector<SetOutcome> results(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t q = next++; q < total; q = next++)
      results[q] = run_experiment_set(plan, plan.cells[q / per], static_cast<int>(q % per));
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentReport rep;
  rep.seed = plan.seed;
  for (std::size_t c = 0; c < plan.cells.size(); ++c) {
    CellReport cr;
    cr.cell = plan.cells[c];
    cr.sets = plan.sets;
    cr.trials = plan.trials;
    double acs = 0.0, wcs = 0.0;
    for (std::size_t k = 0; k < per; ++k) {
      const SetOutcome& r = results[c * per + k];
      if (!r.ok) {
        ++cr.failures;
        cr.errors.push_back("set " + std::to_string(k) + ": " + r.error);
        continue;
      }
      ++cr.solved;
      acs += r.acs_mean;
      wcs += r.wcs_mean;
      cr.misses += r.acs_misses + r.wcs_misses;
    }
    if (cr.solved > 0) {
      cr.acs_mean = acs / cr.solved;
      cr.wcs_mean = wcs / cr.solved;
      cr.improvement_pct = cr.wcs_mean > 0.0 ? (cr.wcs_mean - cr.acs_mean) / cr.wcs_mean * 100.0 : 0.0;
    }
    rep.cells.push_back(std::move(cr));
  }
  return rep;
}

inline std::string provenance_line(std::uint64_t seed, const std::string& input_hash) {
  return std::string("# tool=") + kToolName + " version=" + kToolVersion + " seed=" + std::to_string(seed) +
         " input=" + input_hash + "\n";
}

inline std::string report_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << provenance_line(rep.seed, rep.plan_hash);
  os << "n_tasks,ratio,sets,trials,acs_mean,wcs_mean,improvement_pct,misses,failures\n";
  os << std::setprecision(10);
  for (const auto& c : rep.cells) {
    os << c.cell.n_tasks << ',' << c.cell.ratio << ',' << c.sets << ',' << c.trials << ',' << c.acs_mean << ','
       << c.wcs_mean << ',' << c.improvement_pct << ',' << c.misses << ',' << c.failures << '\n';
  }
  return os.str();
}

// Improvement against ratio, one table per task count.
inline std::map<int, std::string> plot_csvs(const ExperimentReport& rep) {
  std::map<int, std::vector<const CellReport*>> by_n;
  for (const auto& c : rep.cells) by_n[c.cell.n_tasks].push_back(&c);
  std::map<int, std::string> out;
  for (auto& [n, cells] : by_n) {
    std::stable_sort(cells.begin(), cells.end(),
                     [](const CellReport* a, const CellReport* b) { return a->cell.ratio < b->cell.ratio; });
    std::ostringstream os;
    os << provenance_line(rep.seed, rep.plan_hash);
    os << "ratio,improvement_pct,acs_mean,wcs_mean\n" << std::setprecision(10);
    for (const CellReport* c : cells)
      os << c->cell.ratio << ',' << c->improvement_pct << ',' << c->acs_mean << ',' << c->wcs_mean << '\n';
    out[n] = os.str();
  }
  return out;
}

}  // namespace acs
