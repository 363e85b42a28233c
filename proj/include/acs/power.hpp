#pragma once

#include <acs/error.hpp>

#include <cmath>
#include <sstream>

namespace acs {

enum class PowerLaw {
  AlphaLaw,    // CT(v) = lambda * v / (v - vth)^alpha
  InverseLaw,  // CT(v) = lambda / v
};

// Supply-voltage model of a variable-voltage processor. Voltages are
// continuous over [vmin, vmax].
class PowerModel {
 public:
  PowerModel() : PowerModel(PowerLaw::AlphaLaw, 1.0, 0.7, 2.0, 1.0, 5.0) {}

  PowerModel(PowerLaw law, double lambda, double vth, double alpha, double vmin, double vmax)
      : law_(law), lambda_(lambda), vth_(law == PowerLaw::InverseLaw ? 0.0 : vth),
        alpha_(alpha), vmin_(vmin), vmax_(vmax) {
    validate();
  }

  static PowerModel inverse_law(double lambda, double vmin, double vmax) {
    return PowerModel(PowerLaw::InverseLaw, lambda, 0.0, 1.0, vmin, vmax);
  }
  static PowerModel alpha_law(double lambda, double vth, double alpha, double vmin, double vmax) {
    return PowerModel(PowerLaw::AlphaLaw, lambda, vth, alpha, vmin, vmax);
  }

  PowerLaw law() const noexcept { return law_; }
  double lambda() const noexcept { return lambda_; }
  double vth() const noexcept { return vth_; }
  double alpha() const noexcept { return alpha_; }
  double vmin() const noexcept { return vmin_; }
  double vmax() const noexcept { return vmax_; }

  /// Time per cycle at supply voltage v. Throws DomainError outside [vmin, vmax].
  double cycle_time(double v) const {
    if (!(v >= vmin_ && v <= vmax_)) {
      std::ostringstream os;
      os << "cycle_time: voltage " << v << " outside [" << vmin_ << ", " << vmax_ << "]";
      throw DomainError(os.str());
    }
    return raw_cycle_time(v);
  }

  // Slowest and fastest cycle times, CT(vmin) and CT(vmax).
  double slowest_cycle_time() const noexcept { return raw_cycle_time(vmin_); }
  double fastest_cycle_time() const noexcept { return raw_cycle_time(vmax_); }

  // dCT/dv, unchecked.
  double cycle_time_slope(double v) const noexcept {
    if (law_ == PowerLaw::InverseLaw) return -lambda_ / (v * v);
    const double x = v - vth_;
    return lambda_ * std::pow(x, -alpha_ - 1.0) * (x - alpha_ * v);
  }

  /// Voltage whose cycle time is `ct`, for ct within [CT(vmax), CT(vmin)].
  /// Values outside that range are clamped to the nearest end of the range.
  double voltage_at_cycle_time(double ct) const noexcept {
    if (ct >= slowest_cycle_time()) return vmin_;
    if (ct <= fastest_cycle_time()) return vmax_;
    if (law_ == PowerLaw::InverseLaw) return lambda_ / ct;
    if (alpha_ == 2.0) {
      // ct (v - vth)^2 = lambda v; the larger root lies on the decreasing branch.
      const double b = 2.0 * ct * vth_ + lambda_;
      const double disc = lambda_ * lambda_ + 4.0 * ct * vth_ * lambda_;
      return (b + std::sqrt(disc)) / (2.0 * ct);
    }
    return bisect(ct);
  }

  friend bool operator==(const PowerModel&, const PowerModel&) = default;

 private:
  double raw_cycle_time(double v) const noexcept {
    if (law_ == PowerLaw::InverseLaw) return lambda_ / v;
    return lambda_ * v / std::pow(v - vth_, alpha_);
  }

  double bisect(double ct) const noexcept {
    double lo = vmin_;  // CT(lo) > ct
    double hi = vmax_;  // CT(hi) < ct
    while (hi - lo > 1e-12 * hi) {
      const double mid = 0.5 * (lo + hi);
      if (raw_cycle_time(mid) > ct) lo = mid; else hi = mid;
    }
    // Newton polish from the bracket midpoint.
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < 2; ++it) {
      const double next = v - (raw_cycle_time(v) - ct) / cycle_time_slope(v);
      if (next >= lo && next <= hi) v = next;
    }
    return v;
  }

  void validate() const {
    if (!(lambda_ > 0.0)) throw DomainError("power model: lambda must be positive");
    if (law_ == PowerLaw::AlphaLaw && !(alpha_ >= 1.0 && alpha_ <= 2.0))
      throw DomainError("power model: alpha must lie in [1, 2]");
    if (!(vth_ < vmin_ && vmin_ < vmax_))
      throw DomainError("power model: requires vth < vmin < vmax");
    constexpr int kGrid = 1000;
    double prev = raw_cycle_time(vmin_);
    for (int g = 1; g <= kGrid; ++g) {
      const double v = vmin_ + (vmax_ - vmin_) * g / kGrid;
      const double ct = raw_cycle_time(v);
      if (!(ct < prev)) throw DomainError("power model: cycle time not strictly decreasing on [vmin, vmax]");
      prev = ct;
    }
  }

  PowerLaw law_;
  double lambda_;
  double vth_;
  double alpha_;
  double vmin_;
  double vmax_;
};

inline double cycle_time(const PowerModel& m, double v) { return m.cycle_time(v); }

/// Duration of w cycles at voltage v.
inline double exec_time(const PowerModel& m, double w, double v) {
  if (w < 0.0) throw DomainError("exec_time: negative workload");
  return w * m.cycle_time(v);
}

/// Dynamic energy C * w * v^2.
inline double energy(double capacitance, double w, double v) { return capacitance * w * v * v; }

struct VoltageChoice {
  enum class Status {
    Exact,       // the duration is met exactly
    Surplus,     // even vmin finishes early; clamped to vmin
    Infeasible,  // vmax is too slow; clamped to vmax
  };

  double volts = 0.0;
  Status status = Status::Exact;

  bool feasible() const noexcept { return status != Status::Infeasible; }
};

/// Lowest voltage in [vmin, vmax] that runs w cycles within duration d.
inline VoltageChoice voltage_for_duration(const PowerModel& m, double w, double d) {
  if (!(w > 0.0) || !(d > 0.0)) throw DomainError("voltage_for_duration: requires w > 0 and d > 0");
  const double ct = d / w;
  if (ct >= m.slowest_cycle_time()) return {m.vmin(), VoltageChoice::Status::Surplus};
  if (ct < m.fastest_cycle_time()) return {m.vmax(), VoltageChoice::Status::Infeasible};
  return {m.voltage_at_cycle_time(ct), VoltageChoice::Status::Exact};
}

}  // namespace acs
