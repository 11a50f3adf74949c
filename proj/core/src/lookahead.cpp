#include "dcabc/lookahead.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "dcabc/error.hpp"
#include "dcabc/gaussian.hpp"

namespace dcabc {

namespace {

std::atomic<std::uint64_t> next_system_id{1};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void WeightingSpec::validate() const {
  if (!(cov_scale > 0.0) || !std::isfinite(cov_scale)) throw DomainError("weighting: cov_scale must be positive");
  if (horizon_steps < 1) throw DomainError("weighting: horizon_steps must be at least 1");
}

ParticleSystem::ParticleSystem(int particles, const TimeGrid& grid, int state_dim, ParamVector theta)
    : p_(particles),
      d_(state_dim),
      n_(grid.fine_count()),
      grid_(grid),
      theta_(std::move(theta)),
      id_(next_system_id.fetch_add(1)),
      states_((n_ + 1) * static_cast<std::size_t>(particles) * static_cast<std::size_t>(state_dim), 0.0),
      log_w_(Eigen::MatrixXd::Zero(particles, static_cast<Eigen::Index>(n_ + 1))),
      norm_w_(Eigen::MatrixXd::Constant(particles, static_cast<Eigen::Index>(n_ + 1), 1.0 / particles)) {
  if (particles < 1) throw DomainError("particle system needs at least one particle");
}

State ParticleSystem::state(int j, std::size_t k) const {
  return Eigen::Map<const Eigen::VectorXd>(state_ptr(j, k), d_);
}

void ParticleSystem::set_state(int j, std::size_t k, const State& x) {
  Eigen::Map<Eigen::VectorXd>(state_ptr(j, k), d_) = x;
}

void ParticleSystem::normalize() {
  for (Eigen::Index k = 0; k < log_w_.cols(); ++k) {
    auto col = log_w_.col(k);
    const double lse = log_sum_exp(col);
    if (lse == kNegInf || std::isnan(lse)) {
      bool identical = true;
      for (int j = 1; j < p_ && identical; ++j)
        for (int c = 0; c < d_; ++c)
          if (state_ptr(j, static_cast<std::size_t>(k))[c] != state_ptr(0, static_cast<std::size_t>(k))[c])
            identical = false;
      if (!identical)
        throw DegenerateSystem("all lookahead weights vanish at fine index " + std::to_string(k),
                               static_cast<std::size_t>(k));
      norm_w_.col(k).setConstant(1.0 / p_);
      continue;
    }
    norm_w_.col(k) = (col.array() - lse).exp();
  }
}

Trajectory ParticleSystem::particle_coarse(int j) const {
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid_.intervals() + 1), d_);
  for (std::size_t i = 0; i <= grid_.intervals(); ++i)
    values.row(static_cast<Eigen::Index>(i)) = state(j, grid_.offset(i)).transpose();
  return make_coarse(grid_, std::move(values), Origin::Forward);
}

Trajectory ParticleSystem::particle_fine(int j) const {
  Trajectory t;
  t.resolution = Resolution::Fine;
  t.origin = Origin::Forward;
  t.times = grid_.fine_times();
  t.values.resize(static_cast<Eigen::Index>(n_ + 1), d_);
  for (std::size_t k = 0; k <= n_; ++k) t.values.row(static_cast<Eigen::Index>(k)) = state(j, k).transpose();
  return t;
}

double lookahead_elapsed(const WeightingSpec& spec, const TimeGrid& grid, std::size_t k) {
  const std::size_t i = grid.interval_of(k);
  if (k == grid.offset(i + 1)) return spec.horizon_steps * grid.step(i);  // endpoint
  return grid.obs_time(i + 1) - grid.fine_time(k);
}

double lookahead_weight_from(const WeightingSpec& spec, const State& x, const State& mu,
                             const DiffusionMatrix& sigma, const State& x_obs_next, double elapsed_eff) {
  const State mean = x + mu * elapsed_eff;
  const StateCov cov = (sigma * sigma.transpose()) * (spec.cov_scale * elapsed_eff);
  const auto lp = gaussian_logpdf(x_obs_next, mean, cov);
  return lp ? *lp : kNegInf;
}

double lookahead_weight(const WeightingSpec& spec, const SdeModel& model, const ParamVector& theta,
                        const State& x, double tau, const State& x_obs_next, double t_next, double h) {
  if (t_next < tau) throw DomainError("lookahead weight: target time precedes the particle");
  const double elapsed = t_next > tau ? t_next - tau : spec.horizon_steps * h;
  const State mu = model.drift(x, theta);
  const DiffusionMatrix sigma = model.diffusion(x, theta);
  check_finite(x, mu, sigma);
  return lookahead_weight_from(spec, x, mu, sigma, x_obs_next, elapsed);
}

namespace {

// d = m = 1, Euler-Maruyama. Same draws and states as the scalar branch of
// simulate_forward; log(var) is split so constant-diffusion models skip a log.
void run_scalar(const SdeModel& model, const ParamVector& theta, const TimeGrid& grid,
                const std::vector<State>& targets, const std::vector<double>& elapsed,
                const std::vector<std::size_t>& target_of, const WeightingSpec& spec, StreamKey key,
                ParticleSystem& sys) {
  const std::size_t n_fine = grid.fine_count();
  std::vector<double> scaled(n_fine + 1), log_scaled(n_fine + 1), target(n_fine + 1);
  for (std::size_t k = 1; k <= n_fine; ++k) {
    scaled[k] = spec.cov_scale * elapsed[k];
    log_scaled[k] = std::log(scaled[k]);
    target[k] = targets[target_of[k]][0];
  }
  auto& logw = sys.log_weights();
  double last_s2 = std::numeric_limits<double>::quiet_NaN(), last_log_s2 = 0.0;
  auto weight = [&](double x, double mu, double sigma, std::size_t k) {
    const double s2 = sigma * sigma;
    const double var = s2 * scaled[k];
    if (!(var > 0.0) || !std::isfinite(var)) return kNegInf;
    if (s2 != last_s2) {
      last_s2 = s2;
      last_log_s2 = std::log(s2);
    }
    const double r = target[k] - (x + mu * elapsed[k]);
    return -0.5 * (kLog2Pi + last_log_s2 + log_scaled[k] + r * r / var);
  };

  for (int j = 0; j < sys.particles(); ++j) {
    Engine rng = key.child(static_cast<std::uint64_t>(j)).engine();
    std::normal_distribution<double> normal;
    double x = targets[0][0];
    *sys.state_ptr(j, 0) = x;
    std::size_t k = 0;
    double mu, sigma;
    for (std::size_t i = 0; i < grid.intervals(); ++i) {
      const double h = grid.step(i), sqrt_h = std::sqrt(h);
      for (int s = 0; s < grid.subintervals(i); ++s) {
        model.scalar_coefficients(x, theta, mu, sigma);
        if (!std::isfinite(mu) || !std::isfinite(sigma))
          throw SimulationFailure("non-finite drift or diffusion", {x});
        if (k > 0) logw(j, static_cast<Eigen::Index>(k)) = weight(x, mu, sigma, k);
        x = em_update_scalar(model, x, mu, sigma, h, sqrt_h, normal(rng));
        *sys.state_ptr(j, ++k) = x;
      }
    }
    model.scalar_coefficients(x, theta, mu, sigma);
    if (!std::isfinite(mu) || !std::isfinite(sigma)) throw SimulationFailure("non-finite drift or diffusion", {x});
    logw(j, static_cast<Eigen::Index>(n_fine)) = weight(x, mu, sigma, n_fine);
  }
}

}  // namespace

ParticleSystem run_lookahead_sis(const SdeModel& model, const ParamVector& theta, const Trajectory& obs,
                                 const TimeGrid& grid, int particles, const WeightingSpec& spec, Scheme scheme,
                                 StreamKey key) {
  if (static_cast<std::size_t>(obs.length()) != grid.intervals() + 1)
    throw DomainError("lookahead: observation length does not match the grid");
  if (obs.dim() != model.state_dim()) throw DomainError("lookahead: observation dimension mismatch");
  const int d = model.state_dim();
  const int m = model.noise_dim();
  const std::size_t n_fine = grid.fine_count();

  std::vector<State> targets(grid.intervals() + 1);
  for (std::size_t i = 0; i <= grid.intervals(); ++i) targets[i] = obs.values.row(static_cast<Eigen::Index>(i)).transpose();
  std::vector<double> elapsed(n_fine + 1, 0.0);
  std::vector<std::size_t> target_of(n_fine + 1, 0);
  for (std::size_t k = 1; k <= n_fine; ++k) {
    elapsed[k] = lookahead_elapsed(spec, grid, k);
    target_of[k] = grid.interval_of(k) + 1;
  }

  ParticleSystem sys(particles, grid, d, theta);
  auto& logw = sys.log_weights();
  if (scheme == Scheme::EulerMaruyama && model.has_scalar_coefficients()) {
    run_scalar(model, theta, grid, targets, elapsed, target_of, spec, key, sys);
    sys.normalize();
    return sys;
  }
  for (int j = 0; j < particles; ++j) {
    Engine rng = key.child(static_cast<std::uint64_t>(j)).engine();
    std::normal_distribution<double> normal;
    State x = targets[0];
    sys.set_state(j, 0, x);
    std::size_t k = 0;
    for (std::size_t i = 0; i < grid.intervals(); ++i) {
      const double h = grid.step(i);
      for (int s = 0; s < grid.subintervals(i); ++s) {
        const State mu = model.drift(x, theta);
        const DiffusionMatrix sigma = model.diffusion(x, theta);
        check_finite(x, mu, sigma);
        if (k > 0) logw(j, static_cast<Eigen::Index>(k)) =
            lookahead_weight_from(spec, x, mu, sigma, targets[target_of[k]], elapsed[k]);
        const Noise z = draw_noise(m, normal, rng);
        x = scheme == Scheme::EulerMaruyama ? em_update(model, x, mu, sigma, h, z)
                                            : milstein_step(model, x, theta, h, z);
        sys.set_state(j, ++k, x);
      }
    }
    const State mu = model.drift(x, theta);
    const DiffusionMatrix sigma = model.diffusion(x, theta);
    check_finite(x, mu, sigma);
    logw(j, static_cast<Eigen::Index>(n_fine)) =
        lookahead_weight_from(spec, x, mu, sigma, targets.back(), elapsed[n_fine]);
  }
  sys.normalize();
  return sys;
}

int representative_index(const ParticleSystem& system, const Trajectory& obs) {
  const auto& grid = system.grid();
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int j = 0; j < system.particles(); ++j) {
    double dist = 0.0;
    for (std::size_t i = 0; i <= grid.intervals(); ++i)
      dist += (system.state(j, grid.offset(i)) - obs.values.row(static_cast<Eigen::Index>(i)).transpose())
                  .squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

Trajectory select_representative_forward(const ParticleSystem& system, const Trajectory& obs) {
  return system.particle_coarse(representative_index(system, obs));
}

double weight_ess(const ParticleSystem& system, std::size_t k) {
  return 1.0 / system.norm_weights().col(static_cast<Eigen::Index>(k)).squaredNorm();
}

}  // namespace dcabc
