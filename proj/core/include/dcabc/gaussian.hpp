#pragma once

#include <Eigen/Dense>
#include <optional>

#include "dcabc/types.hpp"

namespace dcabc {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// log N(x | mean, cov); nullopt when cov is not positive definite.
std::optional<double> mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                 const Eigen::MatrixXd& cov);

/// Small-state variant used on the hot simulation paths.
std::optional<double> gaussian_logpdf(const State& x, const State& mean, const StateCov& cov);

/// Numerically stable log(sum(exp(v))); -inf for empty or all -inf input.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace dcabc
