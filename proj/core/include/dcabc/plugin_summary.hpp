#pragma once

#include <string>
#include <vector>

#include "dcabc/trajectory.hpp"

namespace dcabc {

/// Registered hand-crafted statistics. "basic": per coordinate the mean,
/// population standard deviation, lag-1 autocorrelation (0 at zero variance)
/// and mean absolute increment, concatenated coordinate by coordinate.
Eigen::VectorXd plugin_summary(const std::string& name, const Eigen::MatrixXd& x);
inline Eigen::VectorXd plugin_summary(const std::string& name, const Trajectory& x) {
  return plugin_summary(name, x.values);
}

int plugin_summary_dim(const std::string& name, int state_dim);
std::vector<std::string> plugin_summary_names();

}  // namespace dcabc
