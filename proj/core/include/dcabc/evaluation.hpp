#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcabc {

struct WeightedSample {
  Eigen::MatrixXd points;  // M x p
  Eigen::VectorXd weights; // normalized

  static WeightedSample uniform(Eigen::MatrixXd points);
  Eigen::VectorXd mean() const;
  Eigen::VectorXd variance() const;
};

/// 1-D Wasserstein-1 between weighted samples: integral of |F_a - F_b|.
double wasserstein_1d(const Eigen::VectorXd& a, const Eigen::VectorXd& wa, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& wb);

/// Sum over coordinates of the marginal 1-D distances.
double wasserstein(const WeightedSample& a, const WeightedSample& b);

/// 1 / sum w^2 for normalized weights.
double effective_sample_size(const Eigen::VectorXd& weights);

/// Reads a particle CSV; parameter columns are those other than
/// `weight` and `distance`. Missing weights mean uniform.
WeightedSample read_weighted_sample(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);

void write_weighted_sample(const std::filesystem::path& path, const WeightedSample& sample,
                           const std::vector<std::string>& names, const Eigen::VectorXd* distances = nullptr);

}  // namespace dcabc
