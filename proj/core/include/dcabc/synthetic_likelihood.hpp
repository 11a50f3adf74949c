#pragma once

#include <limits>
#include <string>

#include "dcabc/backward.hpp"
#include "dcabc/summary.hpp"

namespace dcabc {

struct GuardConfig {
  double max_condition_number = 1e3;
  bool clip_positive_log_ratio = true;
  /// When false neither the condition-number rule nor the clip is applied.
  bool enabled = true;

  void validate() const;
};

enum class SlStatus { Ok, Clipped, RejectedCondition, RejectedForwardDegenerate, RejectedBackward };

const char* to_string(SlStatus status);

struct SlEstimate {
  Eigen::VectorXd fwd_mean;
  Eigen::MatrixXd fwd_cov;
  Eigen::VectorXd bwd_mean;
  Eigen::MatrixXd bwd_cov;
  double fwd_condition = 0.0;
  double bwd_condition = 0.0;
  /// -inf when clipped or rejected.
  double log_ratio = -std::numeric_limits<double>::infinity();
  SlStatus status = SlStatus::Ok;

  bool rejected() const noexcept {
    return status == SlStatus::RejectedCondition || status == SlStatus::RejectedForwardDegenerate ||
           status == SlStatus::RejectedBackward;
  }
};

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased, n - 1 denominator
};

/// Samples are columns.
GaussianMoments empirical_moments(const Eigen::MatrixXd& samples);

/// log N(s | mean, cov) under the empirical moments of `samples` (columns).
/// Throws DegenerateCovariance when the sample covariance is singular.
double empirical_gaussian_logpdf(const Eigen::VectorXd& s, const Eigen::MatrixXd& samples);

/// Ratio of largest to smallest eigenvalue magnitude; +inf when singular.
double condition_number(const Eigen::MatrixXd& cov);

/// log N(s | fwd) - log N(s | bwd) with the guards applied.
SlEstimate sl_log_ratio_from_samples(const Eigen::VectorXd& s_eval, const Eigen::MatrixXd& fwd_samples,
                                     const Eigen::MatrixXd& bwd_samples, const GuardConfig& guards);

/// Forward samples summarize the P particles of the sampler's system at the
/// observation times; backward samples are `replicates` fresh draws from the
/// same fixed system.
SlEstimate sl_log_ratio(const BackwardSampler& sampler, const Eigen::VectorXd& s_eval, const SummaryStatistic& summary,
                        int replicates, const GuardConfig& guards, Engine& rng);

}  // namespace dcabc
