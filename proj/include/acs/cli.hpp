#pragma once

#include <acs/benchgen.hpp>
#include <acs/error.hpp>
#include <acs/experiment.hpp>
#include <acs/fps.hpp>
#include <acs/io.hpp>
#include <acs/simulator.hpp>
#include <acs/solver.hpp>
#include <acs/verify.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace acs::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInfeasible = 3,
  kHashMismatch = 4,
};

inline constexpr const char* kOutDirEnv = "ACS_OUT_DIR";

inline std::string default_out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? env : ".";
}

namespace detail {

namespace fs = std::filesystem;

struct SolverFlags {
  int starts = SolverOptions{}.starts;
  std::uint64_t seed = SolverOptions{}.seed;
  int max_outer = SolverOptions{}.max_outer;
  int max_inner = SolverOptions{}.max_inner;

  void add(CLI::App* app) {
    app->add_option("--starts", starts, "Multi-start count")->check(CLI::PositiveNumber);
    app->add_option("--solver-seed", seed, "Seed for random starts");
    app->add_option("--max-outer", max_outer, "Outer iterations per start")->check(CLI::PositiveNumber);
    app->add_option("--max-inner", max_inner, "Inner iterations per outer step")->check(CLI::PositiveNumber);
  }
  SolverOptions options() const {
    SolverOptions o;
    o.starts = starts;
    o.seed = seed;
    o.max_outer = max_outer;
    o.max_inner = max_inner;
    return o;
  }
};

inline std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

inline std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

inline void write_text(const std::string& path, const std::string& text) { acs::detail::write_file(path, text); }

inline CycleMode parse_fixed(const std::string& s) {
  if (s == "acec") return CycleMode::Acec;
  if (s == "wcec") return CycleMode::Wcec;
  if (s == "bcec") return CycleMode::Bcec;
  return CycleMode::Sampled;
}

struct Loaded {
  TaskSetFile doc;
  std::string hash;
  FPSchedule fps;
};

inline Loaded load_system(const std::string& path, std::size_t cap) {
  Loaded l{load_taskset(path), {}, {}};
  l.hash = taskset_hash(l.doc);
  l.fps = build_fps(l.doc.taskset, cap);
  return l;
}

inline int cmd_gen(int tasks, double ratio, int count, std::uint64_t seed, double util, Tick pmin, Tick pmax,
                   std::size_t cap, const std::string& power_file, const std::string& dir, std::ostream& out) {
  const PowerModel power = power_file.empty() ? PowerModel{} : power_from_json(acs::detail::parse_json(
                                                                   acs::detail::read_file(power_file), power_file));
  GenSpec g;
  g.tasks = tasks;
  g.ratio = ratio;
  g.utilization = util;
  g.period_min = pmin;
  g.period_max = pmax;
  g.max_subinstances = cap;
  Json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["seed"] = seed;
  manifest["spec"] = {{"tasks", tasks},       {"ratio", ratio},           {"utilization", util},
                      {"period_min", pmin},   {"period_max", pmax},       {"max_subinstances", cap},
                      {"capacitance", g.capacitance}, {"count", count}};
  manifest["power_model"] = power_to_json(power);
  manifest["files"] = Json::array();
  for (int k = 0; k < count; ++k) {
    g.seed = trial_seed(seed, static_cast<std::uint64_t>(k));
    TaskSet ts = generate_taskset(g, power);
    char name[64];
    std::snprintf(name, sizeof name, "taskset_n%d_r%g_%03d", tasks, ratio, k);
    TaskSetFile doc{TaskSet(name, ts.tasks(), ts.frame_mode()), power};
    const std::string file = std::string(name) + ".json";
    save_taskset(doc, out_path(dir, file));
    manifest["files"].push_back({{"file", file}, {"seed", g.seed}, {"taskset_hash", taskset_hash(doc)}});
    out << file << '\n';
  }
  write_text(out_path(dir, "manifest.json"), manifest.dump(2) + "\n");
  return kOk;
}

inline int cmd_solve(const std::string& path, const std::string& policy, const SolverFlags& flags, std::size_t cap,
                     const std::string& out_file, const std::string& dir, std::ostream& out, std::ostream& err) {
  const Loaded sys = load_system(path, cap);
  const TaskSet& ts = sys.doc.taskset;
  const PowerModel& model = sys.doc.power;
  StaticSchedule sched;
  try {
    sched = policy == "wcs" ? solve_wcs(sys.fps, ts, model, flags.options())
                            : solve_acs(build_nlp(sys.fps, ts, model), flags.options());
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    if (!e.witness().empty()) err << "witness: " << e.witness() << '\n';
    return kInfeasible;
  }
  const WorstCaseReport rep = verify_worst_case(sched, sys.fps, ts, model);
  if (!rep.feasible) {
    err << "refusing to write a schedule that fails worst-case verification:\n";
    for (const auto& v : rep.violations) err << "  " << v << '\n';
    return kInfeasible;
  }
  const std::string file = out_file.empty() ? out_path(dir, stem(path) + "." + policy + ".schedule.json") : out_file;
  save_schedule(sched, sys.fps, sys.hash, file);
  out << std::setprecision(10);
  out << "policy " << policy << '\n'
      << "sub-instances " << sys.fps.size() << '\n'
      << "objective " << sched.objective << '\n'
      << "status " << to_string(sched.status) << '\n'
      << "residual_max " << sched.residual_max << '\n'
      << "worst_case_energy " << rep.energy << '\n'
      << "verification ok\n"
      << "schedule " << file << '\n';
  return kOk;
}

inline std::optional<ScheduleFile> load_matching(const std::string& sched_path, const Loaded& sys, std::ostream& err) {
  ScheduleFile sf = load_schedule(sched_path, sys.fps);
  if (sf.taskset_hash != sys.hash) {
    err << "schedule was produced for task set " << sf.taskset_hash << ", given task set is " << sys.hash << '\n';
    return std::nullopt;
  }
  return sf;
}

inline int cmd_simulate(const std::string& sched_path, const std::string& ts_path, std::uint64_t trials,
                        std::uint64_t seed, const std::string& fixed, const std::string& trace_file,
                        const std::string& out_file, std::size_t cap, std::ostream& out, std::ostream& err) {
  const Loaded sys = load_system(ts_path, cap);
  const auto sf = load_matching(sched_path, sys, err);
  if (!sf) return kHashMismatch;
  const StaticSchedule& sched = sf->schedule;
  std::ostringstream trace;
  trace << std::setprecision(12);
  const bool want_trace = !trace_file.empty();
  if (want_trace) {
    trace << provenance_line(seed, sys.hash);
    trace << "trial,i,j,k,start,voltage,cycles,duration,energy\n";
  }
  auto on_trace = [&](std::uint64_t k, const Trace& tr) {
    if (!want_trace) return;
    for (const TraceSegment& s : tr.segments)
      trace << k << ',' << s.id.task << ',' << s.id.instance << ',' << s.id.part << ',' << s.start << ','
            << s.voltage << ',' << s.cycles << ',' << s.duration << ',' << s.energy << '\n';
  };
  const MonteCarloResult r =
      run_monte_carlo(sched, sys.fps, sys.doc.taskset, sys.doc.power, trials, seed, parse_fixed(fixed), on_trace);
  std::ostringstream csv;
  csv << provenance_line(seed, sys.hash);
  csv << "policy,trials,mean_energy,std_energy,misses,seed\n" << std::setprecision(12);
  csv << sched.policy << ',' << r.trials << ',' << r.mean_energy << ',' << r.std_energy << ',' << r.misses << ','
      << r.seed << '\n';
  if (out_file.empty()) out << csv.str();
  else write_text(out_file, csv.str());
  if (want_trace) write_text(trace_file, trace.str());
  return kOk;
}

inline int cmd_verify(const std::string& sched_path, const std::string& ts_path, std::size_t cap, std::ostream& out,
                      std::ostream& err) {
  const Loaded sys = load_system(ts_path, cap);
  const auto sf = load_matching(sched_path, sys, err);
  if (!sf) return kHashMismatch;
  const WorstCaseReport rep = verify_worst_case(sf->schedule, sys.fps, sys.doc.taskset, sys.doc.power);
  out << std::setprecision(10) << "worst_case_energy " << rep.energy << '\n';
  if (!rep.feasible) {
    out << "infeasible\n";
    for (const auto& v : rep.violations) out << "  " << v << '\n';
    return kInfeasible;
  }
  out << "feasible\n";
  return kOk;
}

inline int cmd_experiment(const std::string& plan_path, const std::string& dir, unsigned threads, bool strict,
                          std::ostream& out, std::ostream& err) {
  const std::string text = acs::detail::read_file(plan_path);
  const ExperimentPlan plan = plan_from_json(acs::detail::parse_json(text, plan_path));
  ExperimentReport rep = run_experiment(plan, threads);
  rep.plan_hash = hex64(fnv1a64(acs::detail::parse_json(text, plan_path).dump()));
  const std::string report = out_path(dir, "report.csv");
  write_text(report, report_csv(rep));
  for (const auto& [n, csv] : plot_csvs(rep)) write_text(out_path(dir, "improvement_n" + std::to_string(n) + ".csv"), csv);
  for (const auto& c : rep.cells)
    for (const auto& e : c.errors) err << "cell n=" << c.cell.n_tasks << " ratio=" << c.cell.ratio << ": " << e << '\n';
  out << report << '\n';
  if (rep.all_failed()) {
    err << "every cell failed\n";
    return kFailure;
  }
  if (strict && rep.total_misses() > 0) {
    err << "deadline misses: " << rep.total_misses() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace detail

/// Entry point shared by the acsched binary and the tests.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Average-case-aware DVS scheduling: generate, solve, verify, simulate, experiment", "acsched"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  std::string out_dir = default_out_dir();
  app.add_option("--out-dir", out_dir, std::string("Output directory (default $") + kOutDirEnv + " or .)");
  std::size_t cap = kDefaultSubInstanceCap;
  app.add_option("--max-subinstances", cap, "Sub-instance cap")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Generate random task sets");
  int tasks = 5, count = 1;
  double ratio = 0.5, util = 0.7;
  std::uint64_t gen_seed = 1;
  Tick pmin = 10, pmax = 100;
  std::string power_file;
  gen->add_option("--tasks", tasks, "Tasks per set")->required()->check(CLI::PositiveNumber);
  gen->add_option("--ratio", ratio, "BCEC/WCEC ratio in (0, 1]")
      ->required()
      ->check(CLI::Validator(
          [](std::string& s) {
            double v = 0.0;
            if (!CLI::detail::lexical_cast(s, v) || !(v > 0.0 && v <= 1.0)) return std::string("ratio must be in (0, 1]");
            return std::string{};
          },
          "RATIO"));
  gen->add_option("--count", count, "Number of sets")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--utilization", util, "Worst-case utilization at vmax")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--period-min", pmin)->check(CLI::PositiveNumber);
  gen->add_option("--period-max", pmax)->check(CLI::PositiveNumber);
  gen->add_option("--power-model", power_file, "JSON power model")->check(CLI::ExistingFile);

  auto* solve = app.add_subcommand("solve", "Compute a static schedule");
  std::string solve_ts, policy = "acs", solve_out;
  detail::SolverFlags flags;
  solve->add_option("taskset", solve_ts, "Task-set file")->required()->check(CLI::ExistingFile);
  solve->add_option("--policy", policy, "acs or wcs")->check(CLI::IsMember({"acs", "wcs"}));
  solve->add_option("-o,--out", solve_out, "Schedule file");
  flags.add(solve);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo replay of a schedule");
  std::string sim_sched, sim_ts, fixed, trace_file, sim_out;
  std::uint64_t trials = 1000, sim_seed = 1;
  sim->add_option("schedule", sim_sched, "Schedule file")->required()->check(CLI::ExistingFile);
  sim->add_option("taskset", sim_ts, "Task-set file")->required()->check(CLI::ExistingFile);
  sim->add_option("--trials", trials, "Frames to simulate")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Seed");
  sim->add_option("--fixed", fixed, "Fix every job at acec, wcec or bcec cycles")
      ->check(CLI::IsMember({"acec", "wcec", "bcec"}));
  sim->add_option("--trace", trace_file, "Per-segment trace CSV");
  sim->add_option("-o,--out", sim_out, "Aggregate CSV (default stdout)");

  auto* ver = app.add_subcommand("verify", "Replay the all-WCEC frame against a schedule");
  std::string ver_sched, ver_ts;
  ver->add_option("schedule", ver_sched, "Schedule file")->required()->check(CLI::ExistingFile);
  ver->add_option("taskset", ver_ts, "Task-set file")->required()->check(CLI::ExistingFile);

  auto* exp = app.add_subcommand("experiment", "ACS against WCS over random task sets");
  std::string plan_path;
  unsigned threads = 1;
  bool strict = false;
  exp->add_option("plan", plan_path, "Plan file")->required()->check(CLI::ExistingFile);
  exp->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  exp->add_flag("--strict", strict, "Fail on any deadline miss");

  std::vector<std::string> argv_store{"acsched"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*gen) {
      if (pmax < pmin) {
        err << "--period-max must not be below --period-min\n";
        return kUsage;
      }
      return detail::cmd_gen(tasks, ratio, count, gen_seed, util, pmin, pmax, cap, power_file, out_dir, out);
    }
    if (*solve) return detail::cmd_solve(solve_ts, policy, flags, cap, solve_out, out_dir, out, err);
    if (*sim) return detail::cmd_simulate(sim_sched, sim_ts, trials, sim_seed, fixed, trace_file, sim_out, cap, out, err);
    if (*ver) return detail::cmd_verify(ver_sched, ver_ts, cap, out, err);
    if (*exp) return detail::cmd_experiment(plan_path, out_dir, threads, strict, out, err);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    if (!e.witness().empty()) err << "witness: " << e.witness() << '\n';
    return kInfeasible;
  } catch (const DomainError& e) {
    err << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace acs::cli
