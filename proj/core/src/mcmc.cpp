#include "dcabc/mcmc.hpp"

#include <cmath>
#include <limits>

#include "dcabc/error.hpp"

namespace dcabc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_target(const LogTarget& ll, const PriorBox& prior, const ParamVector& theta) {
  if (!prior.contains(theta)) return kNegInf;
  const double v = ll(theta);
  return std::isnan(v) ? kNegInf : v;
}

}  // namespace

Eigen::VectorXd batch_means_se(const Eigen::MatrixXd& chain, int batches) {
  const Eigen::Index n = chain.rows();
  const Eigen::Index size = n / batches;
  if (size < 1) return Eigen::VectorXd::Constant(chain.cols(), std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd means(batches, chain.cols());
  for (int b = 0; b < batches; ++b) means.row(b) = chain.middleRows(b * size, size).colwise().mean();
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::RowVectorXd var = (means.rowwise() - grand).array().square().colwise().sum() / (batches - 1.0);
  return (var.array() / batches).sqrt().transpose();
}

McmcResult mcmc_random_walk(const LogTarget& log_likelihood, const PriorBox& prior, const McmcConfig& config,
                            Engine& rng) {
  const Eigen::Index p = prior.dim();
  const Eigen::VectorXd width = prior.upper() - prior.lower();

  ParamVector theta;
  double current = kNegInf;
  if (config.initial) {
    theta = *config.initial;
    current = log_target(log_likelihood, prior, theta);
  } else {
    for (std::size_t i = 0; i < std::max<std::size_t>(config.start_candidates, 1); ++i) {
      ParamVector cand = prior.sample(rng);
      const double v = log_target(log_likelihood, prior, cand);
      if (theta.size() == 0 || v > current) {
        theta = cand;
        current = v;
      }
    }
  }

  const auto burn_in = static_cast<std::size_t>(config.burn_in_fraction * static_cast<double>(config.iterations));
  Eigen::MatrixXd shape = (width * config.initial_scale).array().square().matrix().asDiagonal();
  double scale = 1.0;
  Eigen::MatrixXd chol = shape.llt().matrixL();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<ParamVector> kept;
  kept.reserve((config.iterations - burn_in) / std::max<std::size_t>(config.thin, 1) + 1);

  // Burn-in history used for covariance adaptation.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(p, p);
  std::size_t history = 0;

  McmcResult res;
  std::size_t window_accepts = 0, window = 0, post_accepts = 0, total_accepts = 0;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < p; ++i) z[i] = normal(rng);
    const ParamVector prop = theta + scale * (chol * z);
    const double cand = log_target(log_likelihood, prior, prop);
    const bool accept = cand > kNegInf && std::log(unif(rng)) < cand - current;
    if (accept) {
      theta = prop;
      current = cand;
      ++window_accepts;
      ++total_accepts;
      if (it >= burn_in) ++post_accepts;
    }
    ++window;

    if (it < burn_in) {
      if (it >= burn_in / 4) {
        sum += theta;
        outer += theta * theta.transpose();
        ++history;
      }
      if (window == config.adapt_interval) {
        const double rate = static_cast<double>(window_accepts) / static_cast<double>(window);
        res.acceptance_trace.push_back(rate);
        if (rate < config.target_low) scale *= 0.8;
        else if (rate > config.target_high) scale *= 1.25;
        if (history > 10 * static_cast<std::size_t>(p) && it >= burn_in / 2) {
          const Eigen::VectorXd mean = sum / static_cast<double>(history);
          Eigen::MatrixXd cov = outer / static_cast<double>(history) - mean * mean.transpose();
          cov = (2.38 * 2.38 / static_cast<double>(p)) * cov;
          cov += 1e-12 * width.array().square().matrix().asDiagonal().toDenseMatrix();
          Eigen::LLT<Eigen::MatrixXd> llt(cov);
          if (llt.info() == Eigen::Success) {
            // Keep the overall step comparable when switching shape.
            if (shape.isDiagonal()) scale = 1.0;
            shape = cov;
            chol = llt.matrixL();
          }
        }
        window = window_accepts = 0;
      }
    } else {
      if (window == config.adapt_interval) {
        res.acceptance_trace.push_back(static_cast<double>(window_accepts) / static_cast<double>(window));
        window = window_accepts = 0;
      }
      if ((it - burn_in) % std::max<std::size_t>(config.thin, 1) == 0) kept.push_back(theta);
    }
  }

  Eigen::MatrixXd pts(static_cast<Eigen::Index>(kept.size()), p);
  for (std::size_t i = 0; i < kept.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
  res.sample = WeightedSample::uniform(std::move(pts));
  const std::size_t post = config.iterations - burn_in;
  res.acceptance_rate = post ? static_cast<double>(post_accepts) / static_cast<double>(post) : 0.0;
  res.all_rejected = total_accepts == 0;
  res.mean = res.sample.points.colwise().mean().transpose();
  res.standard_error = batch_means_se(res.sample.points);
  return res;
}

double exact_log_likelihood(const SdeModel& model, const Trajectory& obs, const ParamVector& theta) {
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < obs.length(); ++i) {
    const double dt = obs.times[static_cast<std::size_t>(i + 1)] - obs.times[static_cast<std::size_t>(i)];
    const State from = obs.values.row(i).transpose();
    const State to = obs.values.row(i + 1).transpose();
    try {
      total += model.exact_transition_logpdf(to, from, theta, dt);
    } catch (const DomainError&) {
      return kNegInf;
    }
    if (!std::isfinite(total)) return kNegInf;
  }
  return total;
}

McmcResult mcmc_exact(const SdeModel& model, const Trajectory& obs, const McmcConfig& config, Engine& rng) {
  if (!model.has_exact_transition()) throw DomainError(model.id() + " has no exact transition density");
  return mcmc_random_walk([&](const ParamVector& th) { return exact_log_likelihood(model, obs, th); },
                          model.prior(), config, rng);
}

}  // namespace dcabc
