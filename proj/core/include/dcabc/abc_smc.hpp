#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dcabc/backward.hpp"
#include "dcabc/lookahead.hpp"
#include "dcabc/summary.hpp"
#include "dcabc/synthetic_likelihood.hpp"

namespace dcabc {

enum class SamplerMode { Forward, DataConditional };

const char* to_string(SamplerMode mode);

struct SmcConfig {
  SamplerMode mode = SamplerMode::Forward;
  int particles = 1000;          // M
  int max_rounds = 10;           // T
  double alpha = 0.5;            // threshold quantile
  double stop_acceptance = 0.015;
  int stop_after_round = 2;      // the acceptance rule applies for t > this
  double budget_factor = 200.0;  // attempts per round <= budget_factor * M
  int propose_retries = 100;
  int lookahead_particles = 30;  // P
  WeightingSpec weighting;
  Scheme scheme = Scheme::EulerMaruyama;
  BackwardConfig backward;
  GuardConfig guards;
  std::uint64_t seed = 1;
  int workers = 1;
  bool record_sl_diagnostics = false;

  void validate() const;
  std::size_t round_budget() const;
};

/// Weighted parameter population of one round.
struct Population {
  int round = 0;
  Eigen::MatrixXd particles;  // M x p
  Eigen::VectorXd log_weights;
  Eigen::VectorXd weights;    // normalized
  Eigen::VectorXd distances;
  double threshold = 0.0;     // epsilon used to accept this round
  Eigen::MatrixXd perturb_cov;  // kernel that generated this round (empty in round 1)
  /// Every log weight was -inf and uniform weights were substituted.
  bool uniform_fallback = false;

  Eigen::Index size() const noexcept { return particles.rows(); }
};

struct SlDiagnostic {
  ParamVector theta;
  double fwd_condition;
  double bwd_condition;
  double log_ratio;
  SlStatus status;
};

struct RoundLog {
  int round = 0;
  double epsilon = 0.0;
  std::size_t proposals = 0;  // simulator attempts, including failed ones
  std::size_t accepted = 0;
  std::size_t proposal_failures = 0;   // no in-box perturbation within the retry budget
  std::size_t simulation_failures = 0; // non-finite dynamics or degenerate particle system
  std::size_t sl_rejected = 0;
  std::size_t sl_clipped = 0;
  double acceptance_rate = 0.0;
  double ess = 0.0;
  double seconds = 0.0;             // this round, including summary retraining before it
  double cumulative_seconds = 0.0;
  double train_seconds = 0.0;
  bool retrained = false;
  bool summaries_frozen = false;
  bool budget_exhausted = false;
  Eigen::VectorXd observed_summary;
  std::vector<SlDiagnostic> sl_diagnostics;
  TrainReport train_report;
};

enum class RunStatus { Complete, LowAcceptance, BudgetExhausted, TimeLimit };

const char* to_string(RunStatus status);

struct SmcResult {
  std::vector<Population> rounds;
  std::vector<RoundLog> logs;
  RunStatus status = RunStatus::Complete;
};

using RoundCallback = std::function<void(const Population&, const RoundLog&)>;

/// Twice the weighted (normalized-weight) covariance, jittered by 1e-10 I
/// until positive definite.
Eigen::MatrixXd perturb_cov(const Population& population);
Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& particles, const Eigen::VectorXd& weights);

/// Multivariate normal kernel N(theta_j, cov) used by the sampler.
class PerturbationKernel {
 public:
  explicit PerturbationKernel(const Eigen::MatrixXd& cov);
  /// theta + A z with A A^T = cov (symmetric square root, so PSD covariances work).
  ParamVector perturb(const ParamVector& center, Engine& rng) const;
  /// log N(theta | center, cov); -inf when the covariance is singular.
  double log_density(const ParamVector& theta, const ParamVector& center) const;

 private:
  Eigen::MatrixXd sqrt_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;
  bool density_ok_ = false;
};

/// Multinomial pick by weight, then perturbation redrawn until it lies in the
/// prior box; nullopt after `retries` out-of-box draws.
std::optional<ParamVector> propose(const Population& population, const PerturbationKernel& kernel,
                                   const PriorBox& prior, Engine& rng, int retries = 100);

/// Nearest-rank alpha quantile: sorted[ceil(alpha K) - 1].
double adaptive_threshold(std::vector<double> distances, double alpha);

/// log pi(theta) - log sum_j W_j N(theta | theta_j, Sigma).
double smc_weight_forward(const ParamVector& theta, const Population& previous, const PerturbationKernel& kernel,
                          const PriorBox& prior);
/// Forward weight plus the synthetic-likelihood log ratio; round 1 passes no
/// previous population and uses the prior alone. -inf when the SL is rejected.
double smc_weight_dc(const ParamVector& theta, const Population* previous, const PerturbationKernel* kernel,
                     const PriorBox& prior, const SlEstimate& sl);

/// Normalized weights; uniform (and `fallback` set) when all are -inf.
Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& log_weights, bool* fallback = nullptr);

/// Forward (F) or data-conditional (DC) ABC-SMC. Past `time_limit_seconds`
/// of wall time the run stops between attempt batches and drops the
/// unfinished round.
SmcResult run_abc_smc(const SdeModel& model, const Trajectory& obs, const TimeGrid& grid, const SmcConfig& config,
                      SummarySchedule& summaries, const RoundCallback& on_round = {},
                      std::optional<double> time_limit_seconds = std::nullopt);

}  // namespace dcabc
