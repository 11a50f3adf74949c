#include "dcabc/backward.hpp"

#include <cmath>
#include <limits>

#include "dcabc/error.hpp"
#include "dcabc/gaussian.hpp"
#include "dcabc/transitions.hpp"

namespace dcabc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Eigen::VectorXd smoothing_probs_from_log_terms(const Eigen::VectorXd& log_w, const Eigen::VectorXd& log_p,
                                               std::size_t time_index) {
  Eigen::VectorXd terms = log_w + log_p;
  for (Eigen::Index j = 0; j < terms.size(); ++j)
    if (std::isnan(terms[j])) terms[j] = kNegInf;
  const double lse = log_sum_exp(terms);
  if (!std::isfinite(lse))
    throw DegenerateBackward("all backward smoothing terms vanish at fine index " + std::to_string(time_index),
                             time_index);
  return (terms.array() - lse).exp();
}

Eigen::VectorXd smoothing_probs(const Eigen::VectorXd& norm_weights, const std::vector<State>& states,
                                const State& target, const SdeModel& model, const ParamVector& theta,
                                double elapsed) {
  if (!(elapsed > 0.0)) throw DomainError("smoothing_probs: elapsed must be positive");
  const auto p = norm_weights.size();
  Eigen::VectorXd log_w(p), log_p(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    log_w[j] = norm_weights[j] > 0.0 ? std::log(norm_weights[j]) : kNegInf;
    try {
      log_p[j] = em_transition_logpdf(model, target, states[static_cast<std::size_t>(j)], theta, elapsed);
    } catch (const DegenerateCovariance&) {
      log_p[j] = kNegInf;
    }
  }
  return smoothing_probs_from_log_terms(log_w, log_p);
}

int sample_index(const Eigen::VectorXd& probs, Engine& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng) * probs.sum();
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    last_positive = static_cast<int>(j);
    acc += probs[j];
    if (r < acc) return static_cast<int>(j);
  }
  return last_positive;
}

BackwardSampler::BackwardSampler(const ParticleSystem& system, const SdeModel& model, BackwardConfig config)
    : system_(&system), config_(config) {
  const auto& grid = system.grid();
  if (config.stride == BackwardConfig::Stride::Observation) {
    for (std::size_t i = 0; i <= grid.intervals(); ++i) times_.push_back(grid.offset(i));
  } else {
    for (std::size_t k = 0; k <= system.fine_count(); ++k) times_.push_back(k);
  }
  const int p = system.particles();
  const ParamVector& theta = system.theta();
  // Slot 0 is the deterministic start, so kernels are only needed from slot 1.
  kernels_.resize(times_.size() * static_cast<std::size_t>(p));
  for (std::size_t s = 1; s + 1 < times_.size(); ++s) {
    const double elapsed = grid.fine_time(times_[s + 1]) - grid.fine_time(times_[s]);
    for (int j = 0; j < p; ++j) {
      Kernel& ker = kernels_[s * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)];
      const State x = system.state(j, times_[s]);
      const State mu = model.drift(x, theta);
      const DiffusionMatrix sigma = model.diffusion(x, theta);
      if (!mu.allFinite() || !sigma.allFinite()) continue;
      ker.mean = x + mu * elapsed;
      const StateCov cov = (sigma * sigma.transpose()) * elapsed;
      Eigen::LLT<StateCov> llt(cov);
      if (llt.info() != Eigen::Success) continue;
      ker.chol = llt.matrixL();
      double logdet = 0.0;
      bool ok = true;
      for (Eigen::Index c = 0; c < cov.rows(); ++c) {
        const double l = ker.chol(c, c);
        if (!(l > 0.0) || !std::isfinite(l)) ok = false;
        else logdet += 2.0 * std::log(l);
      }
      if (!ok) continue;
      ker.log_norm = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + logdet);
      ker.valid = true;
    }
  }
}

double BackwardSampler::log_transition(std::size_t slot, int j, const State& target) const {
  const Kernel& ker = kernels_[slot * static_cast<std::size_t>(system_->particles()) + static_cast<std::size_t>(j)];
  if (!ker.valid) return kNegInf;
  const State r = target - ker.mean;
  if (r.size() == 1) {
    const double y = r[0] / ker.chol(0, 0);
    return ker.log_norm - 0.5 * y * y;
  }
  const State y = ker.chol.triangularView<Eigen::Lower>().solve(r);
  return ker.log_norm - 0.5 * y.squaredNorm();
}

Eigen::VectorXd BackwardSampler::probs(std::size_t slot, const State& target) const {
  const int p = system_->particles();
  const auto k = static_cast<Eigen::Index>(times_[slot]);
  Eigen::VectorXd log_w(p), log_p(p);
  for (int j = 0; j < p; ++j) {
    const double w = system_->norm_weights()(j, k);
    log_w[j] = w > 0.0 ? std::log(w) : kNegInf;
    log_p[j] = w > 0.0 ? log_transition(slot, j, target) : kNegInf;
  }
  return smoothing_probs_from_log_terms(log_w, log_p, times_[slot]);
}

std::vector<int> BackwardSampler::sample_indices(Engine& rng) const {
  const std::size_t last = times_.size() - 1;
  std::vector<int> idx(times_.size(), 0);
  idx[last] = sample_index(system_->norm_weights_at(times_[last]), rng);
  State target = system_->state(idx[last], times_[last]);
  for (std::size_t s = last - 1; s >= 1; --s) {
    idx[s] = sample_index(probs(s, target), rng);
    target = system_->state(idx[s], times_[s]);
  }
  return idx;
}

Trajectory BackwardSampler::trajectory_from_indices(const std::vector<int>& indices) const {
  const auto& grid = system_->grid();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid.intervals() + 1), system_->state_dim());
  std::size_t row = 0;
  for (std::size_t s = 0; s < times_.size(); ++s) {
    if (times_[s] != grid.offset(row)) continue;
    values.row(static_cast<Eigen::Index>(row)) = system_->state(indices[s], times_[s]).transpose();
    if (++row > grid.intervals()) break;
  }
  return make_coarse(grid, std::move(values), Origin::Backward);
}

Trajectory BackwardSampler::sample(Engine& rng) const { return trajectory_from_indices(sample_indices(rng)); }

Trajectory backward_sample(const ParticleSystem& system, const SdeModel& model, const BackwardConfig& config,
                           Engine& rng) {
  return BackwardSampler(system, model, config).sample(rng);
}

}  // namespace dcabc
