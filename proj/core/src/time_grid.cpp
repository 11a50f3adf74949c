#include "dcabc/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "dcabc/error.hpp"

namespace dcabc {

TimeGrid::TimeGrid(std::vector<double> obs_times, std::vector<int> subintervals)
    : obs_times_(std::move(obs_times)), subintervals_(std::move(subintervals)) {
  if (obs_times_.size() < 2) throw DomainError("time grid needs at least two observation times");
  if (subintervals_.size() == 1 && obs_times_.size() > 2)
    subintervals_.assign(obs_times_.size() - 1, subintervals_.front());
  if (subintervals_.size() != obs_times_.size() - 1)
    throw DomainError("time grid: one subinterval count per observation interval required");

  offsets_.assign(1, 0);
  steps_.clear();
  for (std::size_t i = 0; i + 1 < obs_times_.size(); ++i) {
    const double delta = obs_times_[i + 1] - obs_times_[i];
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw DomainError("time grid: observation times must be strictly increasing");
    if (subintervals_[i] < 1) throw DomainError("time grid: subintervals must be positive");
    steps_.push_back(delta / subintervals_[i]);
    offsets_.push_back(offsets_.back() + static_cast<std::size_t>(subintervals_[i]));
  }
}

TimeGrid TimeGrid::regular(double t0, double delta, std::size_t intervals, int subintervals) {
  if (intervals == 0) throw DomainError("time grid: need at least one interval");
  std::vector<double> times(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) times[i] = t0 + static_cast<double>(i) * delta;
  return TimeGrid(std::move(times), std::vector<int>(intervals, subintervals));
}

std::size_t TimeGrid::interval_of(std::size_t k) const {
  if (k == 0) return 0;
  // First offset >= k marks the right end of the containing interval.
  auto it = std::lower_bound(offsets_.begin(), offsets_.end(), k);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

double TimeGrid::fine_time(std::size_t k) const {
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
  const auto i = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  if (i >= intervals()) return obs_times_.back();
  return obs_times_[i] + static_cast<double>(k - offsets_[i]) * steps_[i];
}

std::vector<double> TimeGrid::fine_times() const {
  std::vector<double> out;
  out.reserve(fine_count() + 1);
  for (std::size_t i = 0; i < intervals(); ++i)
    for (int k = 0; k < subintervals_[i]; ++k)
      out.push_back(obs_times_[i] + static_cast<double>(k) * steps_[i]);
  out.push_back(obs_times_.back());
  return out;
}

bool TimeGrid::is_regular() const noexcept {
  for (std::size_t i = 1; i < subintervals_.size(); ++i) {
    if (subintervals_[i] != subintervals_[0]) return false;
    if (std::abs(delta(i) - delta(0)) > 1e-12 * std::max(1.0, std::abs(delta(0)))) return false;
  }
  return true;
}

}  // namespace dcabc
