#include "dcabc/transitions.hpp"

#include <cmath>
#include <limits>

#include "dcabc/error.hpp"
#include "dcabc/gaussian.hpp"

namespace dcabc {

double em_transition_logpdf(const SdeModel& model, const State& to, const State& from,
                            const ParamVector& theta, double elapsed) {
  const State mean = from + model.drift(from, theta) * elapsed;
  const DiffusionMatrix s = model.diffusion(from, theta);
  const StateCov cov = (s * s.transpose()) * elapsed;
  const auto lp = gaussian_logpdf(to, mean, cov);
  if (!lp) throw DegenerateCovariance("EM transition covariance is singular");
  return *lp;
}

OuMoments ou_transition_moments(double from, const ParamVector& theta, double elapsed) {
  const double alpha = theta[0], beta = theta[1], sigma = theta[2];
  const double decay = std::exp(-beta * elapsed);
  // sigma^2 (1 - e^{-2 beta t}) / (2 beta), continuous at beta = 0.
  const double bt = 2.0 * beta * elapsed;
  const double factor = std::abs(bt) < 1e-12 ? elapsed : -std::expm1(-bt) / (2.0 * beta);
  return {alpha + (from - alpha) * decay, sigma * sigma * factor};
}

double ou_exact_transition_logpdf(double to, double from, const ParamVector& theta, double elapsed) {
  const OuMoments m = ou_transition_moments(from, theta, elapsed);
  const double r = to - m.mean;
  return -0.5 * (kLog2Pi + std::log(m.variance) + r * r / m.variance);
}

double cir_exact_transition_logpdf(double to, double from, const ParamVector& theta, double elapsed) {
  if (!(to > 0.0) || !(from > 0.0)) throw DomainError("CIR transition density needs positive states");
  const double alpha = theta[0], beta = theta[1], sigma = theta[2];
  const double s2 = sigma * sigma;
  const double c = 2.0 * beta / (s2 * -std::expm1(-beta * elapsed));
  const double u = c * from * std::exp(-beta * elapsed);
  const double v = c * to;
  const double q = 2.0 * alpha * beta / s2 - 1.0;
  return std::log(c) - u - v + 0.5 * q * (std::log(v) - std::log(u)) + log_bessel_i(q, 2.0 * std::sqrt(u * v));
}

namespace {

double log_bessel_series(double nu, double x) {
  // sum_k (x/2)^{2k+nu} / (k! Gamma(k+nu+1)), accumulated relative to the first term.
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 1000; ++k) {
    term *= q / ((k + 1.0) * (k + nu + 1.0));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum);
}

// Large argument, small order.
double log_bessel_hankel(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
    if (std::abs(next) >= std::abs(term)) break;  // asymptotic series started diverging
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(sum);
}

// Uniform asymptotic expansion in the order.
double log_bessel_debye(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double eta = root + std::log(z / (1.0 + root));
  const double p = 1.0 / root;
  const double p2 = p * p;
  const double u1 = p * (3.0 - 5.0 * p2) / 24.0;
  const double u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0;
  const double u3 = p * p2 * (30375.0 - 369603.0 * p2 + 765765.0 * p2 * p2 - 425425.0 * p2 * p2 * p2) / 414720.0;
  const double u4 = p2 * p2 *
                    (4465125.0 - 94121676.0 * p2 + 349922430.0 * p2 * p2 - 446185740.0 * p2 * p2 * p2 +
                     185910725.0 * p2 * p2 * p2 * p2) /
                    39813120.0;
  const double series = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) + u4 / (nu * nu * nu * nu);
  return nu * eta - 0.5 * std::log(2.0 * M_PI * nu) - 0.25 * std::log(1.0 + z * z) + std::log(series);
}

}  // namespace

double log_bessel_i(double nu, double x) {
  if (nu < -1.0) throw DomainError("log_bessel_i: order below -1");
  if (x < 0.0) throw DomainError("log_bessel_i: negative argument");
  if (nu == -1.0) nu = 1.0;  // I_{-n} = I_n for integer n
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (x < 30.0) return log_bessel_series(nu, x);
  // For -1 < nu < 0 the difference between I_nu and I_{-nu} is O(e^{-x}) here.
  const double a = std::abs(nu);
  if (4.0 * a * a < x) return log_bessel_hankel(a, x);
  return log_bessel_debye(a, x);
}

}  // namespace dcabc
