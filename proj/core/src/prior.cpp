#include "dcabc/prior.hpp"

#include <cmath>
#include <limits>

#include "dcabc/error.hpp"

namespace dcabc {

PriorBox::PriorBox(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw DomainError("prior bounds differ in length");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
      throw DomainError("prior bound " + std::to_string(i) + ": lower must be below upper");
    log_volume_ += std::log(upper_[i] - lower_[i]);
  }
}

bool PriorBox::contains(const ParamVector& theta) const {
  if (theta.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return false;
  return true;
}

double PriorBox::log_density(const ParamVector& theta) const {
  return contains(theta) ? -log_volume_ : -std::numeric_limits<double>::infinity();
}

ParamVector PriorBox::sample(Engine& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParamVector theta(lower_.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    theta[i] = lower_[i] + (upper_[i] - lower_[i]) * u(rng);
  return theta;
}

}  // namespace dcabc
