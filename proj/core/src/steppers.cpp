#include "dcabc/steppers.hpp"

#include <algorithm>
#include <cmath>

#include "dcabc/error.hpp"

namespace dcabc {

void check_finite(const State& x, const State& mu, const DiffusionMatrix& sigma) {
  if (!mu.allFinite() || !sigma.allFinite())
    throw SimulationFailure("non-finite drift or diffusion", std::vector<double>(x.data(), x.data() + x.size()));
}

State em_update(const SdeModel& model, const State& x, const State& mu, const DiffusionMatrix& sigma,
                double h, const Noise& z) {
  State next = x + mu * h + sigma * (z * std::sqrt(h));
  if (!next.allFinite())
    throw SimulationFailure("non-finite EM update", std::vector<double>(x.data(), x.data() + x.size()));
  if (const auto& floor = model.state_floor()) next = next.cwiseMax(*floor);
  return next;
}

double em_update_scalar(const SdeModel& model, double x, double mu, double sigma, double h, double sqrt_h,
                        double z) {
  if (!std::isfinite(mu) || !std::isfinite(sigma)) throw SimulationFailure("non-finite drift or diffusion", {x});
  double next = x + mu * h + sigma * (z * sqrt_h);
  if (!std::isfinite(next)) throw SimulationFailure("non-finite EM update", {x});
  if (const auto& floor = model.state_floor()) next = std::max(next, *floor);
  return next;
}

State em_step(const SdeModel& model, const State& x, const ParamVector& theta, double h, const Noise& z) {
  const State mu = model.drift(x, theta);
  const DiffusionMatrix sigma = model.diffusion(x, theta);
  check_finite(x, mu, sigma);
  return em_update(model, x, mu, sigma, h, z);
}

double milstein_coefficient(const SdeModel& model, const State& x, const ParamVector& theta,
                            const DiffusionMatrix& sigma) {
  Noise ds;
  if (model.diffusion_derivative(x, theta, ds)) return (sigma.row(0).transpose().array() * ds.array()).sum();
  // Central difference of sum_j sigma_j^2, halved.
  State lo = x, hi = x;
  lo[0] -= kDiffusionFdStep;
  hi[0] += kDiffusionFdStep;
  const double vlo = model.diffusion(lo, theta).row(0).squaredNorm();
  const double vhi = model.diffusion(hi, theta).row(0).squaredNorm();
  return 0.25 * (vhi - vlo) / kDiffusionFdStep;
}

State milstein_step(const SdeModel& model, const State& x, const ParamVector& theta, double h,
                    const Noise& z) {
  if (model.state_dim() != 1) throw DomainError("Milstein step is implemented for d = 1 only");
  const State mu = model.drift(x, theta);
  const DiffusionMatrix sigma = model.diffusion(x, theta);
  check_finite(x, mu, sigma);
  const double coef = milstein_coefficient(model, x, theta, sigma);
  State next = x + mu * h + sigma * (z * std::sqrt(h));
  const double s_eff = sigma.row(0).norm();
  if (s_eff > 0.0 && coef != 0.0) {
    // Increment of the equivalent scalar Brownian motion.
    const double dw = (sigma.row(0) * z).value() * std::sqrt(h) / s_eff;
    next[0] += 0.5 * coef * (dw * dw - h);
  }
  if (!next.allFinite())
    throw SimulationFailure("non-finite Milstein update", std::vector<double>(x.data(), x.data() + x.size()));
  if (const auto& floor = model.state_floor()) next = next.cwiseMax(*floor);
  return next;
}

State step(Scheme scheme, const SdeModel& model, const State& x, const ParamVector& theta, double h,
           const Noise& z) {
  return scheme == Scheme::Milstein ? milstein_step(model, x, theta, h, z) : em_step(model, x, theta, h, z);
}

}  // namespace dcabc
