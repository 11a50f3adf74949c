#pragma once

#include <vector>

#include "dcabc/lookahead.hpp"

namespace dcabc {

struct BackwardConfig {
  enum class Stride { Observation, Fine };
  Stride stride = Stride::Observation;
};

/// Probabilities proportional to w_j p_EM(target | x_j, elapsed).
Eigen::VectorXd smoothing_probs(const Eigen::VectorXd& norm_weights, const std::vector<State>& states,
                                const State& target, const SdeModel& model, const ParamVector& theta,
                                double elapsed);

/// Normalizes exp(log_w + log_p); throws DegenerateBackward if every term is -inf.
Eigen::VectorXd smoothing_probs_from_log_terms(const Eigen::VectorXd& log_w, const Eigen::VectorXd& log_p,
                                               std::size_t time_index = 0);

/// Index drawn from normalized probabilities.
int sample_index(const Eigen::VectorXd& probs, Engine& rng);

/// Backward sampler over one fixed particle system. The EM transition from
/// every stored state is precomputed once, so repeated draws are cheap.
class BackwardSampler {
 public:
  BackwardSampler(const ParticleSystem& system, const SdeModel& model, BackwardConfig config = {});

  const ParticleSystem& system() const noexcept { return *system_; }
  BackwardConfig config() const noexcept { return config_; }

  /// Selected particle index at each visited time (observation or fine indices);
  /// entry 0 refers to the shared initial state.
  std::vector<int> sample_indices(Engine& rng) const;
  Trajectory sample(Engine& rng) const;
  Trajectory trajectory_from_indices(const std::vector<int>& indices) const;

  /// Fine indices visited by the recursion, in increasing order.
  const std::vector<std::size_t>& times() const noexcept { return times_; }

  /// log p_EM(target | particle j at times()[slot]) for the step to times()[slot + 1].
  double log_transition(std::size_t slot, int j, const State& target) const;
  Eigen::VectorXd probs(std::size_t slot, const State& target) const;

 private:
  struct Kernel {
    State mean;
    StateCov chol;  // lower factor of the covariance
    double log_norm = 0.0;
    bool valid = false;
  };

  const ParticleSystem* system_;
  BackwardConfig config_;
  std::vector<std::size_t> times_;
  std::vector<Kernel> kernels_;  // slot-major, P per slot
};

Trajectory backward_sample(const ParticleSystem& system, const SdeModel& model, const BackwardConfig& config,
                           Engine& rng);

}  // namespace dcabc
