#include "dcabc/simulate.hpp"

#include <cmath>

#include "dcabc/error.hpp"

namespace dcabc {

namespace {

template <class Sink>
void run(const SdeModel& model, const ParamVector& theta, const TimeGrid& grid, const State& x0, Scheme scheme,
         Engine& rng, Sink&& sink) {
  if (x0.size() != model.state_dim()) throw DomainError("initial state has the wrong dimension");
  const int m = model.noise_dim();
  std::normal_distribution<double> normal;
  State x = x0;
  std::size_t k = 0;
  sink(k, x);
  if (scheme == Scheme::EulerMaruyama && model.has_scalar_coefficients()) {
    double xs = x0[0];
    for (std::size_t i = 0; i < grid.intervals(); ++i) {
      const double h = grid.step(i), sqrt_h = std::sqrt(h);
      for (int s = 0; s < grid.subintervals(i); ++s) {
        double mu, sigma;
        model.scalar_coefficients(xs, theta, mu, sigma);
        xs = em_update_scalar(model, xs, mu, sigma, h, sqrt_h, normal(rng));
        x[0] = xs;
        sink(++k, x);
      }
    }
    return;
  }
  for (std::size_t i = 0; i < grid.intervals(); ++i) {
    const double h = grid.step(i);
    for (int s = 0; s < grid.subintervals(i); ++s) {
      const Noise z = draw_noise(m, normal, rng);
      x = step(scheme, model, x, theta, h, z);
      sink(++k, x);
    }
  }
}

}  // namespace

Trajectory simulate_forward(const SdeModel& model, const ParamVector& theta, const TimeGrid& grid,
                            const State& x0, Scheme scheme, Engine& rng) {
  Trajectory out;
  out.resolution = Resolution::Fine;
  out.origin = Origin::Forward;
  out.times = grid.fine_times();
  out.values.resize(static_cast<Eigen::Index>(grid.fine_count() + 1), model.state_dim());
  run(model, theta, grid, x0, scheme, rng,
      [&](std::size_t k, const State& x) { out.values.row(static_cast<Eigen::Index>(k)) = x.transpose(); });
  return out;
}

Trajectory simulate_coarse(const SdeModel& model, const ParamVector& theta, const TimeGrid& grid,
                           const State& x0, Scheme scheme, Engine& rng) {
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid.intervals() + 1), model.state_dim());
  std::size_t next = 0;
  run(model, theta, grid, x0, scheme, rng, [&](std::size_t k, const State& x) {
    if (next <= grid.intervals() && k == grid.offset(next)) values.row(static_cast<Eigen::Index>(next++)) = x.transpose();
  });
  return make_coarse(grid, std::move(values), Origin::Forward);
}

Trajectory generate_observation(const SdeModel& model, const ParamVector& theta, const State& x0,
                                double fine_dt, int thin, double horizon, Engine& rng) {
  if (!(fine_dt > 0.0) || thin < 1 || !(horizon > 0.0)) throw DomainError("observation: bad time settings");
  const double delta = fine_dt * thin;
  const double count = horizon / delta;
  const auto n = static_cast<std::size_t>(std::llround(count));
  if (n == 0 || std::abs(count - static_cast<double>(n)) > 1e-9 * count)
    throw DomainError("observation: horizon / fine_dt must be divisible by thin");
  const TimeGrid grid = TimeGrid::regular(0.0, delta, n, thin);
  State start = x0;
  if (const auto& floor = model.state_floor()) start = start.cwiseMax(*floor);
  Trajectory obs = simulate_coarse(model, theta, grid, start, Scheme::EulerMaruyama, rng);
  obs.origin = Origin::Observed;
  return obs;
}

Trajectory generate_observation_exact(const SdeModel& model, const ParamVector& theta, const State& x0,
                                      double delta, std::size_t n, Engine& rng) {
  const TimeGrid grid = TimeGrid::regular(0.0, delta, n, 1);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n + 1), model.state_dim());
  State x = x0;
  if (const auto& floor = model.state_floor()) x = x.cwiseMax(*floor);
  values.row(0) = x.transpose();
  for (std::size_t i = 1; i <= n; ++i) {
    x = model.sample_exact_transition(x, theta, delta, rng);
    values.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  return make_coarse(grid, std::move(values), Origin::Observed);
}

}  // namespace dcabc
