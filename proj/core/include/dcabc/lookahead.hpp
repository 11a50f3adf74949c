#pragma once

#include <cstdint>

#include "dcabc/models.hpp"
#include "dcabc/random.hpp"
#include "dcabc/steppers.hpp"
#include "dcabc/trajectory.hpp"

namespace dcabc {

struct WeightingSpec {
  enum class Kind { EmGaussian, EmGaussianScaled, EmGaussianHorizon };
  Kind kind = Kind::EmGaussian;
  double cov_scale = 1.0;
  int horizon_steps = 1;

  void validate() const;
};

/// P particle paths on the fine grid with per-time lookahead weights.
/// Weight columns are indexed by fine time k = 0..N; column 0 is uniform.
class ParticleSystem {
 public:
  ParticleSystem(int particles, const TimeGrid& grid, int state_dim, ParamVector theta);

  int particles() const noexcept { return p_; }
  int state_dim() const noexcept { return d_; }
  std::size_t fine_count() const noexcept { return n_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const ParamVector& theta() const noexcept { return theta_; }
  /// Distinct for every system built in this process.
  std::uint64_t id() const noexcept { return id_; }

  State state(int j, std::size_t k) const;
  void set_state(int j, std::size_t k, const State& x);
  double* state_ptr(int j, std::size_t k) { return &states_[(k * static_cast<std::size_t>(p_) + j) * d_]; }
  const double* state_ptr(int j, std::size_t k) const {
    return &states_[(k * static_cast<std::size_t>(p_) + j) * d_];
  }

  Eigen::MatrixXd& log_weights() noexcept { return log_w_; }
  const Eigen::MatrixXd& log_weights() const noexcept { return log_w_; }
  const Eigen::MatrixXd& norm_weights() const noexcept { return norm_w_; }
  Eigen::VectorXd norm_weights_at(std::size_t k) const { return norm_w_.col(static_cast<Eigen::Index>(k)); }

  /// Fills norm_weights from log_weights. Throws DegenerateSystem when a
  /// column is all -inf unless every particle shares the same state there.
  void normalize();

  /// Particle j at the observation times.
  Trajectory particle_coarse(int j) const;
  Trajectory particle_fine(int j) const;

 private:
  int p_;
  int d_;
  std::size_t n_;
  TimeGrid grid_;
  ParamVector theta_;
  std::uint64_t id_;
  std::vector<double> states_;
  Eigen::MatrixXd log_w_;
  Eigen::MatrixXd norm_w_;
};

/// log q(x_obs_next | x) with the weighting's effective elapsed time.
double lookahead_weight(const WeightingSpec& spec, const SdeModel& model, const ParamVector& theta,
                        const State& x, double tau, const State& x_obs_next, double t_next, double h);

/// Same, from drift and diffusion already evaluated at x.
double lookahead_weight_from(const WeightingSpec& spec, const State& x, const State& mu,
                             const DiffusionMatrix& sigma, const State& x_obs_next, double elapsed_eff);

/// Effective elapsed time of the weighting Gaussian at fine index k.
double lookahead_elapsed(const WeightingSpec& spec, const TimeGrid& grid, std::size_t k);

/// Forward pass. Particle j draws from `key.child(j)`; no resampling.
ParticleSystem run_lookahead_sis(const SdeModel& model, const ParamVector& theta, const Trajectory& obs,
                                 const TimeGrid& grid, int particles, const WeightingSpec& spec, Scheme scheme,
                                 StreamKey key);

/// Index of the particle closest to obs at the observation times (lowest index on ties).
int representative_index(const ParticleSystem& system, const Trajectory& obs);
Trajectory select_representative_forward(const ParticleSystem& system, const Trajectory& obs);

/// 1 / sum w^2 of the normalized weights at fine index k.
double weight_ess(const ParticleSystem& system, std::size_t k);

}  // namespace dcabc
