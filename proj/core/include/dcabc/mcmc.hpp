#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dcabc/evaluation.hpp"
#include "dcabc/models.hpp"
#include "dcabc/trajectory.hpp"

namespace dcabc {

struct McmcConfig {
  std::size_t iterations = 100000;
  double burn_in_fraction = 0.2;
  std::size_t thin = 1;
  /// Initial random-walk standard deviation as a fraction of each prior width.
  double initial_scale = 0.05;
  double target_low = 0.25;
  double target_high = 0.40;
  std::size_t adapt_interval = 200;
  std::optional<Eigen::VectorXd> initial;
  /// Prior draws screened for a starting point when `initial` is unset.
  std::size_t start_candidates = 200;
};

struct McmcResult {
  WeightedSample sample;  // post burn-in, thinned, uniform weights
  double acceptance_rate = 0.0;          // after burn-in
  std::vector<double> acceptance_trace;  // per adaptation window over the whole run
  bool all_rejected = false;
  Eigen::VectorXd mean;
  Eigen::VectorXd standard_error;  // batch means
};

using LogTarget = std::function<double(const ParamVector&)>;

/// Random-walk Metropolis on the prior box; the target adds `log_likelihood`
/// to the uniform prior. During burn-in the step size is tuned toward the
/// target acceptance band and the proposal shape follows the chain's
/// empirical covariance.
McmcResult mcmc_random_walk(const LogTarget& log_likelihood, const PriorBox& prior, const McmcConfig& config,
                            Engine& rng);

/// Sum of exact transition log densities; -inf outside the density's domain.
double exact_log_likelihood(const SdeModel& model, const Trajectory& obs, const ParamVector& theta);

/// Requires a model with an exact transition density.
McmcResult mcmc_exact(const SdeModel& model, const Trajectory& obs, const McmcConfig& config, Engine& rng);

/// Standard error of each column mean by non-overlapping batch means.
Eigen::VectorXd batch_means_se(const Eigen::MatrixXd& chain, int batches = 50);

}  // namespace dcabc
