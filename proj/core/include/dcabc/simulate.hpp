#pragma once

#include "dcabc/models.hpp"
#include "dcabc/steppers.hpp"
#include "dcabc/trajectory.hpp"

namespace dcabc {

/// Fine trajectory from x0, stepping with h_i on each interval.
Trajectory simulate_forward(const SdeModel& model, const ParamVector& theta, const TimeGrid& grid,
                            const State& x0, Scheme scheme, Engine& rng);

/// Same draws as simulate_forward, keeping only the observation-time rows.
Trajectory simulate_coarse(const SdeModel& model, const ParamVector& theta, const TimeGrid& grid,
                           const State& x0, Scheme scheme, Engine& rng);

/// EM at fine_dt over [0, horizon], keeping every thin-th state.
Trajectory generate_observation(const SdeModel& model, const ParamVector& theta, const State& x0,
                                double fine_dt, int thin, double horizon, Engine& rng);

/// n + 1 states at spacing delta drawn from the exact transition.
Trajectory generate_observation_exact(const SdeModel& model, const ParamVector& theta, const State& x0,
                                      double delta, std::size_t n, Engine& rng);

}  // namespace dcabc
