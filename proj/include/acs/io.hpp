#pragma once

#include <acs/error.hpp>
#include <acs/fps.hpp>
#include <acs/power.hpp>
#include <acs/solver.hpp>
#include <acs/taskmodel.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

namespace acs {

inline constexpr const char* kToolName = "acsched";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

// A task set together with the processor it runs on; the unit stored in a task-set file.
struct TaskSetFile {
  TaskSet taskset;
  PowerModel power;

  friend bool operator==(const TaskSetFile&, const TaskSetFile&) = default;
};

namespace detail {

// Field access with a dotted path for error messages, rejecting unknown keys.
class Fields {
 public:
  Fields(const Json& obj, std::string path, std::initializer_list<const char*> allowed) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError(where() + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!ok.count(it.key())) throw ParseError("unknown field \"" + join(it.key()) + "\"");
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  const Json& raw(const char* key) const {
    if (!obj_.contains(key)) throw ParseError("missing required field \"" + join(key) + "\"");
    return obj_.at(key);
  }

  double number(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_number()) throw ParseError("field \"" + join(key) + "\" must be a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ParseError("field \"" + join(key) + "\" must be an integer");
    return v.get<std::int64_t>();
  }

  std::string text(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_string()) throw ParseError("field \"" + join(key) + "\" must be a string");
    return v.get<std::string>();
  }
  std::string text(const char* key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "document" : path_; }

 private:
  const Json& obj_;
  std::string path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

}  // namespace detail

inline Json power_to_json(const PowerModel& m) {
  Json j;
  j["variant"] = m.law() == PowerLaw::AlphaLaw ? "alpha_law" : "inverse_law";
  j["lambda"] = m.lambda();
  if (m.law() == PowerLaw::AlphaLaw) {
    j["vth"] = m.vth();
    j["alpha"] = m.alpha();
  }
  j["vmin"] = m.vmin();
  j["vmax"] = m.vmax();
  return j;
}

inline PowerModel power_from_json(const Json& j, const std::string& path = "power_model") {
  detail::Fields f(j, path, {"variant", "lambda", "vth", "alpha", "vmin", "vmax"});
  const std::string variant = f.text("variant");
  try {
    if (variant == "inverse_law") {
      return PowerModel::inverse_law(f.number("lambda", 1.0), f.number("vmin"), f.number("vmax"));
    }
    if (variant == "alpha_law") {
      return PowerModel::alpha_law(f.number("lambda", 1.0), f.number("vth", 0.7), f.number("alpha", 2.0),
                                   f.number("vmin"), f.number("vmax"));
    }
  } catch (const DomainError& e) {
    throw ParseError(path + ": " + e.what());
  }
  throw ParseError("field \"" + f.join("variant") + "\" must be \"alpha_law\" or \"inverse_law\"");
}

inline Json to_json(const TaskSetFile& doc) {
  Json j;
  j["name"] = doc.taskset.name();
  j["frame"] = doc.taskset.frame_mode() == FrameMode::Hyperperiod ? "hyperperiod" : "single_release";
  j["power_model"] = power_to_json(doc.power);
  Json tasks = Json::array();
  for (const Task& t : doc.taskset.tasks()) {
    tasks.push_back({{"period", t.period},
                     {"wcec", t.wcec},
                     {"bcec", t.bcec},
                     {"acec", t.acec},
                     {"capacitance", t.capacitance}});
  }
  j["tasks"] = tasks;
  return j;
}

/// Strict reader for the task-set schema. Tasks are listed in priority order;
/// the set must pass validate_taskset().
inline TaskSetFile taskset_from_json(const Json& j) {
  detail::Fields top(j, "", {"name", "frame", "power_model", "tasks"});
  const std::string name = top.text("name", "");
  const std::string frame = top.text("frame", "hyperperiod");
  FrameMode mode = FrameMode::Hyperperiod;
  if (frame == "single_release") mode = FrameMode::SingleRelease;
  else if (frame != "hyperperiod") throw ParseError("field \"frame\" must be \"hyperperiod\" or \"single_release\"");
  const PowerModel power = power_from_json(top.raw("power_model"));

  const Json& arr = top.raw("tasks");
  if (!arr.is_array() || arr.empty()) throw ParseError("field \"tasks\" must be a non-empty array");
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "tasks[" + std::to_string(i) + "]";
    detail::Fields f(arr[i], path, {"period", "wcec", "bcec", "bcec_ratio", "acec", "capacitance"});
    Task t;
    t.period = f.integer("period");
    t.wcec = f.number("wcec");
    if (f.has("bcec") && f.has("bcec_ratio")) throw ParseError(path + ": give either bcec or bcec_ratio, not both");
    if (f.has("bcec")) t.bcec = f.number("bcec");
    else if (f.has("bcec_ratio")) t.bcec = f.number("bcec_ratio") * t.wcec;
    else throw ParseError("missing required field \"" + path + ".bcec\" (or bcec_ratio)");
    t.acec = f.number("acec", 0.5 * (t.bcec + t.wcec));
    t.capacitance = f.number("capacitance", 1.0);
    tasks.push_back(t);
  }
  TaskSet ts(name, std::move(tasks), mode);
  const auto report = validate_taskset(ts);
  if (!report.empty()) {
    std::string msg = "invalid task set:";
    for (const auto& r : report) msg += "\n  " + r;
    throw ParseError(msg);
  }
  return {std::move(ts), power};
}

inline TaskSetFile parse_taskset(const std::string& text) { return taskset_from_json(detail::parse_json(text, "task set")); }

inline TaskSetFile load_taskset(const std::string& path) {
  return taskset_from_json(detail::parse_json(detail::read_file(path), path));
}

inline void save_taskset(const TaskSetFile& doc, const std::string& path) {
  detail::write_file(path, to_json(doc).dump(2) + "\n");
}

/// FNV-1a 64 over bytes.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Identity of a task-set document, stable across formatting of the file.
inline std::string taskset_hash(const TaskSetFile& doc) { return hex64(fnv1a64(to_json(doc).dump())); }

struct ScheduleFile {
  StaticSchedule schedule;
  std::string taskset_hash;
};

inline Json schedule_to_json(const StaticSchedule& s, const FPSchedule& fps, const std::string& hash) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["policy"] = s.policy;
  j["taskset_hash"] = hash;
  j["seed"] = s.seed;
  j["objective"] = s.objective;
  j["status"] = to_string(s.status);
  j["residual_max"] = s.residual_max;
  j["best_start"] = s.best_start;
  j["feasible_starts"] = s.feasible_starts;
  Json rows = Json::array();
  for (const SubInstance& sub : fps) {
    const std::size_t n = sub.order;
    rows.push_back({{"i", sub.id.task},
                    {"j", sub.id.instance},
                    {"k", sub.id.part},
                    {"order", n},
                    {"te", s.te[n]},
                    {"w_hat", s.w_hat[n]},
                    {"ts", s.ts[n]},
                    {"w_bar", s.w_bar[n]},
                    {"v_bar", s.v_bar[n]},
                    {"v_hat", s.v_hat[n]}});
  }
  j["subinstances"] = rows;
  return j;
}

/// Reads a schedule and checks that its fragments match `fps` one for one.
inline ScheduleFile schedule_from_json(const Json& j, const FPSchedule& fps) {
  detail::Fields top(j, "", {"tool", "version", "policy", "taskset_hash", "seed", "objective", "status",
                             "residual_max", "best_start", "feasible_starts", "subinstances"});
  ScheduleFile out;
  StaticSchedule& s = out.schedule;
  out.taskset_hash = top.text("taskset_hash");
  s.policy = top.text("policy");
  s.seed = static_cast<std::uint64_t>(top.integer("seed"));
  s.objective = top.number("objective");
  const std::string status = top.text("status");
  s.status = status == "converged" ? SolveStatus::Converged : SolveStatus::IterationLimit;
  s.residual_max = top.number("residual_max", 0.0);
  s.best_start = top.has("best_start") ? static_cast<int>(top.integer("best_start")) : -1;
  s.feasible_starts = top.has("feasible_starts") ? static_cast<int>(top.integer("feasible_starts")) : 0;
  const Json& rows = top.raw("subinstances");
  if (!rows.is_array() || rows.size() != fps.size())
    throw ParseError("schedule lists " + std::to_string(rows.is_array() ? rows.size() : 0) +
                     " sub-instances, task set expands to " + std::to_string(fps.size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    detail::Fields f(rows[n], "subinstances[" + std::to_string(n) + "]",
                     {"i", "j", "k", "order", "te", "w_hat", "ts", "w_bar", "v_bar", "v_hat"});
    const SubId id{static_cast<int>(f.integer("i")), static_cast<int>(f.integer("j")), static_cast<int>(f.integer("k"))};
    if (id != fps[n].id || static_cast<std::size_t>(f.integer("order")) != n)
      throw ParseError("subinstances[" + std::to_string(n) + "] is " + to_string(id) + ", expected " +
                       to_string(fps[n].id));
    s.te.push_back(f.number("te"));
    s.w_hat.push_back(f.number("w_hat"));
    s.ts.push_back(f.number("ts"));
    s.w_bar.push_back(f.number("w_bar"));
    s.v_bar.push_back(f.number("v_bar"));
    s.v_hat.push_back(f.number("v_hat"));
  }
  return out;
}

inline void save_schedule(const StaticSchedule& s, const FPSchedule& fps, const std::string& hash, const std::string& path) {
  detail::write_file(path, schedule_to_json(s, fps, hash).dump(2) + "\n");
}

inline ScheduleFile load_schedule(const std::string& path, const FPSchedule& fps) {
  return schedule_from_json(detail::parse_json(detail::read_file(path), path), fps);
}

}  // namespace acs
