#pragma once

#include <random>

#include "dcabc/models.hpp"

namespace dcabc {

enum class Scheme { EulerMaruyama, Milstein };

inline constexpr double kDiffusionFdStep = 1e-6;

/// x + mu h + sigma sqrt(h) z, clamped to the model floor.
State em_step(const SdeModel& model, const State& x, const ParamVector& theta, double h, const Noise& z);

/// EM plus the Milstein correction; d = 1 only. With several noise columns
/// the correction uses the single equivalent noise sqrt(sum_j sigma_j^2).
State milstein_step(const SdeModel& model, const State& x, const ParamVector& theta, double h,
                    const Noise& z);

State step(Scheme scheme, const SdeModel& model, const State& x, const ParamVector& theta, double h,
           const Noise& z);

/// EM update from drift and diffusion already evaluated at x.
State em_update(const SdeModel& model, const State& x, const State& mu, const DiffusionMatrix& sigma,
                double h, const Noise& z);

/// em_update for models with scalar coefficients; sqrt_h = sqrt(h).
double em_update_scalar(const SdeModel& model, double x, double mu, double sigma, double h, double sqrt_h,
                        double z);

/// Throws SimulationFailure when mu or sigma has a non-finite entry.
void check_finite(const State& x, const State& mu, const DiffusionMatrix& sigma);

/// sum_j sigma_j sigma_j' at x (d = 1).
double milstein_coefficient(const SdeModel& model, const State& x, const ParamVector& theta,
                            const DiffusionMatrix& sigma);

/// m standard normals. Path simulators keep one distribution per stream so
/// the second value of each polar pair is not thrown away.
template <class Rng>
Noise draw_noise(int m, std::normal_distribution<double>& n, Rng& rng) {
  Noise z(m);
  for (int j = 0; j < m; ++j) z[j] = n(rng);
  return z;
}

template <class Rng>
Noise draw_noise(int m, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return draw_noise(m, n, rng);
}

}  // namespace dcabc
