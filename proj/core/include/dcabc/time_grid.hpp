#pragma once

#include <cstddef>
#include <vector>

namespace dcabc {

/// Observation times t_0 < ... < t_n, each interval split into A_i fine steps.
///
/// Fine times are computed from indices as t_i + k * h_i, never by
/// accumulation, so the fine time at index offset(i) equals t_i exactly.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(std::vector<double> obs_times, std::vector<int> subintervals);

  static TimeGrid regular(double t0, double delta, std::size_t intervals, int subintervals);

  std::size_t intervals() const noexcept { return obs_times_.size() - 1; }
  std::size_t fine_count() const noexcept { return offsets_.back(); }

  const std::vector<double>& obs_times() const noexcept { return obs_times_; }
  double obs_time(std::size_t i) const { return obs_times_[i]; }
  int subintervals(std::size_t i) const { return subintervals_[i]; }
  /// Fine step length h_i on interval [t_i, t_{i+1}].
  double step(std::size_t i) const { return steps_[i]; }
  double delta(std::size_t i) const { return obs_times_[i + 1] - obs_times_[i]; }
  /// Fine index of observation time t_i.
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

  double fine_time(std::size_t k) const;
  /// Interval containing fine index k in (offset(i), offset(i+1)]; 0 for k == 0.
  std::size_t interval_of(std::size_t k) const;
  std::vector<double> fine_times() const;

  bool is_regular() const noexcept;

 private:
  std::vector<double> obs_times_;
  std::vector<int> subintervals_;
  std::vector<double> steps_;
  std::vector<std::size_t> offsets_{0};
};

}  // namespace dcabc
