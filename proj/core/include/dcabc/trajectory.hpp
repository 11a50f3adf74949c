#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dcabc/time_grid.hpp"

namespace dcabc {

enum class Resolution { Coarse, Fine };

/// Where a trajectory came from. The training set only accepts Forward.
enum class Origin { Unspecified, Observed, Forward, Backward };

/// State values on a time grid; one row per time point.
struct Trajectory {
  Resolution resolution = Resolution::Coarse;
  Origin origin = Origin::Unspecified;
  std::vector<double> times;
  Eigen::MatrixXd values;

  Eigen::Index length() const noexcept { return values.rows(); }
  Eigen::Index dim() const noexcept { return values.cols(); }

  /// Rows at the observation times of `grid` (requires a fine trajectory on it).
  Trajectory downsample(const TimeGrid& grid) const;
};

Trajectory make_coarse(const TimeGrid& grid, Eigen::MatrixXd values, Origin origin);

}  // namespace dcabc
