#include "dcabc/trajectory.hpp"

#include "dcabc/error.hpp"

namespace dcabc {

Trajectory Trajectory::downsample(const TimeGrid& grid) const {
  if (resolution == Resolution::Coarse) return *this;
  if (static_cast<std::size_t>(values.rows()) != grid.fine_count() + 1)
    throw DomainError("downsample: trajectory does not match the fine grid");
  Trajectory out;
  out.resolution = Resolution::Coarse;
  out.origin = origin;
  out.times = grid.obs_times();
  out.values.resize(static_cast<Eigen::Index>(grid.intervals() + 1), values.cols());
  for (std::size_t i = 0; i <= grid.intervals(); ++i)
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(grid.offset(i)));
  return out;
}

Trajectory make_coarse(const TimeGrid& grid, Eigen::MatrixXd values, Origin origin) {
  if (static_cast<std::size_t>(values.rows()) != grid.intervals() + 1)
    throw DomainError("coarse trajectory needs one row per observation time");
  Trajectory t;
  t.resolution = Resolution::Coarse;
  t.origin = origin;
  t.times = grid.obs_times();
  t.values = std::move(values);
  return t;
}

}  // namespace dcabc
