#pragma once

#include "dcabc/models.hpp"

namespace dcabc {

/// Log density of the one-step Euler-Maruyama transition over `elapsed`.
/// Throws DegenerateCovariance when sigma sigma^T is singular.
double em_transition_logpdf(const SdeModel& model, const State& to, const State& from,
                            const ParamVector& theta, double elapsed);

struct OuMoments {
  double mean;
  double variance;
};

/// theta = (alpha, beta, sigma).
OuMoments ou_transition_moments(double from, const ParamVector& theta, double elapsed);
double ou_exact_transition_logpdf(double to, double from, const ParamVector& theta, double elapsed);

/// theta = (alpha, beta, sigma) for dX = beta (alpha - X) dt + sigma sqrt(X) dB.
/// Throws DomainError for non-positive states.
double cir_exact_transition_logpdf(double to, double from, const ParamVector& theta, double elapsed);

/// log I_nu(x) for nu >= -1, x >= 0.
double log_bessel_i(double nu, double x);

}  // namespace dcabc
