#pragma once

#include <acs/error.hpp>

#include <algorithm>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

namespace acs {

/// Average-case workload of each fragment of a job whose average demand is
/// `acec` and whose fragments can hold at most `w_hat[k]` cycles. Fragments are
/// filled in order; fragment k runs only once fragments 0..k-1 are full:
///   w_bar[k] = min(w_hat[k], max(0, acec - sum_{k' < k} w_hat[k'])).
inline std::vector<double> average_fill(double acec, std::span<const double> w_hat) {
  double capacity = 0.0;
  for (double w : w_hat) {
    if (w < 0.0) throw DomainError("average_fill: negative worst-case budget");
    capacity += w;
  }
  if (acec > capacity * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "average_fill: average workload " << acec << " exceeds total budget " << capacity;
    throw DomainError(os.str());
  }
  std::vector<double> out(w_hat.size(), 0.0);
  double left = acec;
  for (std::size_t k = 0; k < w_hat.size() && left > 0.0; ++k) {
    out[k] = std::min(w_hat[k], left);
    left -= out[k];
  }
  return out;
}

namespace detail {

// Unchecked fill; any shortfall of the budgets is silently left unassigned.
inline void fill_into(double acec, std::span<const double> w_hat, std::span<double> out) {
  double left = acec;
  for (std::size_t k = 0; k < w_hat.size(); ++k) {
    const double w = std::max(0.0, w_hat[k]);
    out[k] = left > 0.0 ? std::min(w, left) : 0.0;
    left -= out[k];
  }
}

}  // namespace detail

}  // namespace acs
