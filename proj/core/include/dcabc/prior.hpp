#pragma once

#include "dcabc/random.hpp"
#include "dcabc/types.hpp"

namespace dcabc {

/// Independent uniform prior on a box.
class PriorBox {
 public:
  PriorBox() = default;
  PriorBox(Eigen::VectorXd lower, Eigen::VectorXd upper);

  Eigen::Index dim() const noexcept { return lower_.size(); }
  const Eigen::VectorXd& lower() const noexcept { return lower_; }
  const Eigen::VectorXd& upper() const noexcept { return upper_; }

  bool contains(const ParamVector& theta) const;
  /// Log density; -inf outside the box.
  double log_density(const ParamVector& theta) const;
  ParamVector sample(Engine& rng) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  double log_volume_ = 0.0;
};

}  // namespace dcabc
