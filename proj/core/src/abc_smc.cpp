#include "dcabc/abc_smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "dcabc/error.hpp"
#include "dcabc/gaussian.hpp"
#include "dcabc/simulate.hpp"

namespace dcabc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream layout under StreamKey(seed).child(round).child(attempt).
enum Stream : std::uint64_t { kPropose = 0, kSimulate = 1, kBackward = 2, kSynthetic = 3 };

struct Attempt {
  enum class Result { Accepted, Rejected, ProposalFailed, SimulationFailed, SlRejected };
  Result result = Result::Rejected;
  ParamVector theta;
  double distance = kInf;
  SlEstimate sl;
  bool has_sl = false;
  Trajectory train;  // forward trajectory stored in D when accepted
};

struct RoundContext {
  const SdeModel& model;
  const Trajectory& obs;
  const TimeGrid& grid;
  const SmcConfig& config;
  const SummaryStatistic& summary;
  const Eigen::VectorXd& s_obs;
  double epsilon;
  const Population* previous;
  const PerturbationKernel* kernel;
  StreamKey round_key;
};

Attempt evaluate_attempt(const RoundContext& ctx, std::uint64_t index) {
  Attempt a;
  const StreamKey key = ctx.round_key.child(index);
  Engine prop = key.child(kPropose).engine();
  if (ctx.previous == nullptr) {
    a.theta = ctx.model.prior().sample(prop);
  } else {
    auto theta = propose(*ctx.previous, *ctx.kernel, ctx.model.prior(), prop, ctx.config.propose_retries);
    if (!theta) {
      a.result = Attempt::Result::ProposalFailed;
      return a;
    }
    a.theta = std::move(*theta);
  }

  const State x0 = ctx.obs.values.row(0).transpose();
  if (ctx.config.mode == SamplerMode::Forward) {
    try {
      Engine sim = key.child(kSimulate).engine();
      a.train = simulate_coarse(ctx.model, a.theta, ctx.grid, x0, ctx.config.scheme, sim);
    } catch (const SimulationFailure&) {
      a.result = Attempt::Result::SimulationFailed;
      return a;
    }
    a.distance = (ctx.summary.summarize(a.train) - ctx.s_obs).norm();
    a.result = a.distance <= ctx.epsilon ? Attempt::Result::Accepted : Attempt::Result::Rejected;
    return a;
  }

  try {
    const ParticleSystem system =
        run_lookahead_sis(ctx.model, a.theta, ctx.obs, ctx.grid, ctx.config.lookahead_particles,
                          ctx.config.weighting, ctx.config.scheme, key.child(kSimulate));
    const BackwardSampler sampler(system, ctx.model, ctx.config.backward);
    Engine bwd = key.child(kBackward).engine();
    const Trajectory conditional = sampler.sample(bwd);
    const Eigen::VectorXd s_sim = ctx.summary.summarize(conditional);
    a.distance = (s_sim - ctx.s_obs).norm();
    if (!(a.distance <= ctx.epsilon)) {
      a.result = Attempt::Result::Rejected;
      return a;
    }
    Engine syn = key.child(kSynthetic).engine();
    a.sl = sl_log_ratio(sampler, s_sim, ctx.summary, ctx.config.lookahead_particles, ctx.config.guards, syn);
    a.has_sl = true;
    if (a.sl.rejected()) {
      a.result = Attempt::Result::SlRejected;
      return a;
    }
    a.train = select_representative_forward(system, ctx.obs);
    a.result = Attempt::Result::Accepted;
  } catch (const SimulationFailure&) {
    a.result = Attempt::Result::SimulationFailed;
  } catch (const DegenerateSystem&) {
    a.result = Attempt::Result::SimulationFailed;
  } catch (const DegenerateBackward&) {
    a.result = Attempt::Result::SimulationFailed;
  }
  return a;
}

// Evaluates attempts [first, first + count) on up to `workers` threads.
std::vector<Attempt> evaluate_batch(const RoundContext& ctx, std::uint64_t first, std::size_t count, int workers) {
  std::vector<Attempt> out(count);
  const auto nthreads = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(count))));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = evaluate_attempt(ctx, first + i);
    return out;
  }
  std::vector<std::exception_ptr> errors(nthreads);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < nthreads; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += nthreads) out[i] = evaluate_attempt(ctx, first + i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double weighted_ess(const Eigen::VectorXd& w) { return 1.0 / w.squaredNorm(); }

}  // namespace

const char* to_string(SamplerMode mode) { return mode == SamplerMode::Forward ? "forward" : "dc"; }

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Complete: return "complete";
    case RunStatus::LowAcceptance: return "low-acceptance";
    case RunStatus::BudgetExhausted: return "budget-exhausted";
    case RunStatus::TimeLimit: return "time-limit";
  }
  return "unknown";
}

void SmcConfig::validate() const {
  if (particles < 2) throw DomainError("particles must be at least 2");
  if (max_rounds < 1) throw DomainError("max_rounds must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(stop_acceptance >= 0.0 && stop_acceptance < 1.0)) throw DomainError("stop_acceptance must lie in [0, 1)");
  if (!(budget_factor >= 1.0)) throw DomainError("budget_factor must be at least 1");
  if (propose_retries < 1) throw DomainError("propose_retries must be positive");
  if (mode == SamplerMode::DataConditional && lookahead_particles < 2)
    throw DomainError("lookahead_particles must be at least 2");
  if (workers < 1) throw DomainError("workers must be positive");
  weighting.validate();
  guards.validate();
}

std::size_t SmcConfig::round_budget() const {
  return static_cast<std::size_t>(std::ceil(budget_factor * static_cast<double>(particles)));
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& particles, const Eigen::VectorXd& weights) {
  const Eigen::VectorXd w = weights / weights.sum();
  const Eigen::RowVectorXd mean = w.transpose() * particles;
  const Eigen::MatrixXd centered = particles.rowwise() - mean;
  return centered.transpose() * w.asDiagonal() * centered;
}

Eigen::MatrixXd perturb_cov(const Population& population) {
  Eigen::MatrixXd cov = 2.0 * weighted_covariance(population.particles, population.weights);
  cov = 0.5 * (cov + cov.transpose());
  const auto p = cov.rows();
  for (int i = 0; i < 200; ++i) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) break;
    cov += 1e-10 * std::pow(10.0, i / 10) * Eigen::MatrixXd::Identity(p, p);
  }
  return cov;
}

PerturbationKernel::PerturbationKernel(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  sqrt_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    chol_ = llt.matrixL();
    double logdet = 0.0;
    density_ok_ = true;
    for (Eigen::Index i = 0; i < chol_.rows(); ++i) {
      if (!(chol_(i, i) > 0.0)) density_ok_ = false;
      else logdet += 2.0 * std::log(chol_(i, i));
    }
    log_norm_ = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + logdet);
  }
}

ParamVector PerturbationKernel::perturb(const ParamVector& center, Engine& rng) const {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd z(center.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n(rng);
  return center + sqrt_ * z;
}

double PerturbationKernel::log_density(const ParamVector& theta, const ParamVector& center) const {
  if (!density_ok_) return kNegInf;
  const Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(theta - center);
  return log_norm_ - 0.5 * y.squaredNorm();
}

std::optional<ParamVector> propose(const Population& population, const PerturbationKernel& kernel,
                                   const PriorBox& prior, Engine& rng, int retries) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng) * population.weights.sum();
  Eigen::Index pick = population.size() - 1;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < population.size(); ++i) {
    acc += population.weights[i];
    if (r < acc && population.weights[i] > 0.0) {
      pick = i;
      break;
    }
  }
  const ParamVector center = population.particles.row(pick).transpose();
  for (int attempt = 0; attempt < retries; ++attempt) {
    ParamVector theta = kernel.perturb(center, rng);
    if (prior.contains(theta)) return theta;
  }
  return std::nullopt;
}

double adaptive_threshold(std::vector<double> distances, double alpha) {
  if (distances.empty()) throw DomainError("adaptive_threshold: no distances");
  std::sort(distances.begin(), distances.end());
  const double k = static_cast<double>(distances.size());
  // Tolerance keeps products like 0.7 * 10 from rounding up a rank.
  auto rank = static_cast<std::size_t>(std::ceil(alpha * k - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, distances.size());
  return distances[rank - 1];
}

double smc_weight_forward(const ParamVector& theta, const Population& previous, const PerturbationKernel& kernel,
                          const PriorBox& prior) {
  const double lp = prior.log_density(theta);
  if (lp == kNegInf) return kNegInf;
  Eigen::VectorXd terms(previous.size());
  for (Eigen::Index j = 0; j < previous.size(); ++j) {
    const double w = previous.weights[j];
    terms[j] = w > 0.0 ? std::log(w) + kernel.log_density(theta, previous.particles.row(j).transpose()) : kNegInf;
  }
  const double mix = log_sum_exp(terms);
  if (mix == kNegInf) return kNegInf;
  return lp - mix;
}

double smc_weight_dc(const ParamVector& theta, const Population* previous, const PerturbationKernel* kernel,
                     const PriorBox& prior, const SlEstimate& sl) {
  if (sl.rejected()) return kNegInf;
  const double base = previous == nullptr ? prior.log_density(theta)
                                          : smc_weight_forward(theta, *previous, *kernel, prior);
  return base + sl.log_ratio;
}

Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& log_weights, bool* fallback) {
  const double lse = log_sum_exp(log_weights);
  if (fallback) *fallback = false;
  if (!std::isfinite(lse)) {
    if (fallback) *fallback = true;
    return Eigen::VectorXd::Constant(log_weights.size(), 1.0 / static_cast<double>(log_weights.size()));
  }
  return (log_weights.array() - lse).exp();
}

SmcResult run_abc_smc(const SdeModel& model, const Trajectory& obs, const TimeGrid& grid, const SmcConfig& config,
                      SummarySchedule& summaries, const RoundCallback& on_round,
                      std::optional<double> time_limit_seconds) {
  config.validate();
  if (static_cast<std::size_t>(obs.length()) != grid.intervals() + 1)
    throw DomainError("observation length does not match the grid");
  const auto M = static_cast<std::size_t>(config.particles);
  const int p = model.param_dim();
  const StreamKey master(config.seed);
  const auto run_start = Clock::now();
  const std::size_t batch = static_cast<std::size_t>(std::max(1, config.workers)) * 4;

  SmcResult result;
  for (int t = 1; t <= config.max_rounds; ++t) {
    const auto round_start = Clock::now();
    RoundLog log;
    log.round = t;

    // Round boundary: retrain S_t on D, then re-summarize the observation.
    if (t > 1) {
      const auto train_start = Clock::now();
      RetrainEvent ev = summaries.retrain(t);
      log.train_seconds = seconds_since(train_start);
      log.retrained = ev.retrained;
      log.summaries_frozen = ev.froze;
      log.train_report = std::move(ev.report);
    }
    const SummaryPtr summary = summaries.current();
    const Eigen::VectorXd s_obs = summary->summarize(obs);
    log.observed_summary = s_obs;

    const Population* previous = t > 1 ? &result.rounds.back() : nullptr;
    std::optional<PerturbationKernel> kernel;
    Eigen::MatrixXd sigma;
    double epsilon = kInf;
    if (previous) {
      sigma = perturb_cov(*previous);
      kernel.emplace(sigma);
      std::vector<double> d(previous->distances.data(), previous->distances.data() + previous->distances.size());
      epsilon = adaptive_threshold(std::move(d), config.alpha);
    }
    log.epsilon = epsilon;

    const RoundContext ctx{model, obs, grid, config, *summary, s_obs, epsilon, previous,
                           kernel ? &*kernel : nullptr, master.child(static_cast<std::uint64_t>(t))};

    std::vector<Attempt> accepted;
    accepted.reserve(M);
    const std::size_t budget = config.round_budget();
    std::uint64_t next = 0;
    bool out_of_time = false;
    while (accepted.size() < M && next < budget) {
      if (time_limit_seconds && seconds_since(run_start) > *time_limit_seconds) {
        out_of_time = true;
        break;
      }
      const std::size_t count = std::min<std::size_t>(batch, budget - next);
      std::vector<Attempt> results = evaluate_batch(ctx, next, count, config.workers);
      // Commit in attempt order so the outcome does not depend on the worker count.
      for (auto& a : results) {
        if (accepted.size() >= M) break;
        ++next;
        ++log.proposals;
        if (a.has_sl && config.record_sl_diagnostics)
          log.sl_diagnostics.push_back({a.theta, a.sl.fwd_condition, a.sl.bwd_condition, a.sl.log_ratio, a.sl.status});
        switch (a.result) {
          case Attempt::Result::Accepted:
            if (a.has_sl && a.sl.status == SlStatus::Clipped) ++log.sl_clipped;
            accepted.push_back(std::move(a));
            break;
          case Attempt::Result::Rejected: break;
          case Attempt::Result::ProposalFailed: ++log.proposal_failures; break;
          case Attempt::Result::SimulationFailed: ++log.simulation_failures; break;
          case Attempt::Result::SlRejected: ++log.sl_rejected; break;
        }
      }
    }
    log.accepted = accepted.size();
    log.acceptance_rate = log.proposals ? static_cast<double>(log.accepted) / static_cast<double>(log.proposals) : 0.0;
    log.budget_exhausted = !out_of_time && accepted.size() < M;

    if (out_of_time || accepted.size() < 2) {
      log.seconds = seconds_since(round_start);
      log.cumulative_seconds = seconds_since(run_start);
      result.logs.push_back(std::move(log));
      result.status = out_of_time ? RunStatus::TimeLimit : RunStatus::BudgetExhausted;
      break;
    }

    Population pop;
    pop.round = t;
    pop.threshold = epsilon;
    pop.perturb_cov = sigma;
    const auto K = static_cast<Eigen::Index>(accepted.size());
    pop.particles.resize(K, p);
    pop.log_weights.resize(K);
    pop.distances.resize(K);
    for (Eigen::Index i = 0; i < K; ++i) {
      const Attempt& a = accepted[static_cast<std::size_t>(i)];
      pop.particles.row(i) = a.theta.transpose();
      pop.distances[i] = a.distance;
      if (config.mode == SamplerMode::Forward)
        pop.log_weights[i] = previous ? smc_weight_forward(a.theta, *previous, *kernel, model.prior()) : 0.0;
      else
        pop.log_weights[i] = smc_weight_dc(a.theta, previous, kernel ? &*kernel : nullptr, model.prior(), a.sl);
    }
    pop.weights = normalize_log_weights(pop.log_weights, &pop.uniform_fallback);
    log.ess = weighted_ess(pop.weights);

    // Accepted forward trajectories join D; retraining happens at the next boundary.
    if (t < config.max_rounds) {
      std::vector<Trajectory> trajs;
      std::vector<ParamVector> thetas;
      trajs.reserve(accepted.size());
      thetas.reserve(accepted.size());
      for (auto& a : accepted) {
        trajs.push_back(std::move(a.train));
        thetas.push_back(a.theta);
      }
      summaries.append(trajs, thetas);
    }

    log.seconds = seconds_since(round_start);
    log.cumulative_seconds = seconds_since(run_start);
    result.rounds.push_back(std::move(pop));
    result.logs.push_back(std::move(log));
    if (on_round) on_round(result.rounds.back(), result.logs.back());

    const RoundLog& last = result.logs.back();
    if (last.budget_exhausted) {
      result.status = RunStatus::BudgetExhausted;
      break;
    }
    if (t > config.stop_after_round && last.acceptance_rate < config.stop_acceptance) {
      result.status = RunStatus::LowAcceptance;
      break;
    }
  }
  return result;
}

}  // namespace dcabc
