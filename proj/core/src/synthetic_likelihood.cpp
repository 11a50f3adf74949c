#include "dcabc/synthetic_likelihood.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "dcabc/error.hpp"
#include "dcabc/gaussian.hpp"

namespace dcabc {

void GuardConfig::validate() const {
  if (!(max_condition_number > 1.0)) throw DomainError("guards: max_condition_number must exceed 1");
}

const char* to_string(SlStatus status) {
  switch (status) {
    case SlStatus::Ok: return "ok";
    case SlStatus::Clipped: return "clipped";
    case SlStatus::RejectedCondition: return "condition-number";
    case SlStatus::RejectedForwardDegenerate: return "forward-degenerate";
    case SlStatus::RejectedBackward: return "backward-degenerate";
  }
  return "unknown";
}

GaussianMoments empirical_moments(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) throw DegenerateCovariance("need at least two samples for a covariance");
  GaussianMoments m;
  m.mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - m.mean;
  m.cov = centered * centered.transpose() / static_cast<double>(n - 1);
  return m;
}

double empirical_gaussian_logpdf(const Eigen::VectorXd& s, const Eigen::MatrixXd& samples) {
  if (samples.cols() < samples.rows() + 1) throw DegenerateCovariance("fewer samples than dimension + 1");
  const GaussianMoments m = empirical_moments(samples);
  const auto lp = mvn_logpdf(s, m.mean, m.cov);
  if (!lp) throw DegenerateCovariance("sample covariance is singular");
  return *lp;
}

double condition_number(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  if (hi == 0.0 || lo <= hi * static_cast<double>(cov.rows()) * std::numeric_limits<double>::epsilon())
    return std::numeric_limits<double>::infinity();
  return hi / lo;
}

SlEstimate sl_log_ratio_from_samples(const Eigen::VectorXd& s_eval, const Eigen::MatrixXd& fwd_samples,
                                     const Eigen::MatrixXd& bwd_samples, const GuardConfig& guards) {
  SlEstimate est;
  est.log_ratio = -std::numeric_limits<double>::infinity();
  const GaussianMoments fwd = empirical_moments(fwd_samples);
  const GaussianMoments bwd = empirical_moments(bwd_samples);
  est.fwd_mean = fwd.mean;
  est.fwd_cov = fwd.cov;
  est.bwd_mean = bwd.mean;
  est.bwd_cov = bwd.cov;
  est.fwd_condition = condition_number(fwd.cov);
  est.bwd_condition = condition_number(bwd.cov);
  if (guards.enabled && !(est.bwd_condition <= guards.max_condition_number)) {
    est.status = SlStatus::RejectedCondition;
    return est;
  }
  const auto lf = mvn_logpdf(s_eval, fwd.mean, fwd.cov);
  if (!lf || !std::isfinite(*lf)) {
    est.status = SlStatus::RejectedForwardDegenerate;
    return est;
  }
  const auto lb = mvn_logpdf(s_eval, bwd.mean, bwd.cov);
  if (!lb || !std::isfinite(*lb)) {
    est.status = SlStatus::RejectedCondition;
    return est;
  }
  est.log_ratio = *lf - *lb;
  if (guards.enabled && guards.clip_positive_log_ratio && est.log_ratio > 0.0) {
    est.log_ratio = -std::numeric_limits<double>::infinity();
    est.status = SlStatus::Clipped;
  }
  return est;
}

SlEstimate sl_log_ratio(const BackwardSampler& sampler, const Eigen::VectorXd& s_eval, const SummaryStatistic& summary,
                        int replicates, const GuardConfig& guards, Engine& rng) {
  const ParticleSystem& system = sampler.system();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  // Identical index paths give identical trajectories, so each distinct path
  // is summarized once.
  std::map<std::vector<int>, Eigen::Index> slot_of;
  std::vector<Trajectory> distinct;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(replicates));
  try {
    for (int r = 0; r < replicates; ++r) {
      auto path = sampler.sample_indices(rng);
      auto [it, inserted] = slot_of.try_emplace(std::move(path), static_cast<Eigen::Index>(distinct.size()));
      if (inserted) distinct.push_back(sampler.trajectory_from_indices(it->first));
      slot[static_cast<std::size_t>(r)] = it->second;
    }
  } catch (const DegenerateBackward&) {
    SlEstimate est;
    est.status = SlStatus::RejectedBackward;
    return est;
  }

  // Fewer distinct samples than dim + 1 means a singular covariance.
  if (guards.enabled && static_cast<int>(distinct.size()) <= summary.dim()) {
    SlEstimate est;
    est.fwd_condition = kNaN;
    est.bwd_condition = std::numeric_limits<double>::infinity();
    est.log_ratio = -std::numeric_limits<double>::infinity();
    est.status = SlStatus::RejectedCondition;
    return est;
  }

  std::vector<const Eigen::MatrixXd*> xs;
  xs.reserve(distinct.size());
  for (const auto& t : distinct) xs.push_back(&t.values);
  const Eigen::MatrixXd unique_bwd = summary.summarize_batch(xs);
  Eigen::MatrixXd bwd(unique_bwd.rows(), replicates);
  for (int r = 0; r < replicates; ++r) bwd.col(r) = unique_bwd.col(slot[static_cast<std::size_t>(r)]);

  // The forward set is only needed once the backward covariance passes the guard.
  if (guards.enabled) {
    const GaussianMoments m = empirical_moments(bwd);
    const double cond = condition_number(m.cov);
    if (!(cond <= guards.max_condition_number)) {
      SlEstimate est;
      est.bwd_mean = m.mean;
      est.bwd_cov = m.cov;
      est.bwd_condition = cond;
      est.fwd_condition = kNaN;
      est.log_ratio = -std::numeric_limits<double>::infinity();
      est.status = SlStatus::RejectedCondition;
      return est;
    }
  }

  std::vector<Trajectory> fwd;
  fwd.reserve(static_cast<std::size_t>(system.particles()));
  for (int j = 0; j < system.particles(); ++j) fwd.push_back(system.particle_coarse(j));
  xs.clear();
  for (const auto& t : fwd) xs.push_back(&t.values);
  return sl_log_ratio_from_samples(s_eval, summary.summarize_batch(xs), bwd, guards);
}

}  // namespace dcabc
