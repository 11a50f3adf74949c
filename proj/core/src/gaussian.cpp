#include "dcabc/gaussian.hpp"

#include <cmath>
#include <limits>

namespace dcabc {

namespace {

template <class Vec, class Mat>
std::optional<double> logpdf_impl(const Vec& x, const Vec& mean, const Mat& cov) {
  const auto d = x.size();
  if (d == 1) {
    const double var = cov(0, 0);
    if (!(var > 0.0) || !std::isfinite(var)) return std::nullopt;
    const double r = x[0] - mean[0];
    return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
  }
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto& L = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double l = llt.matrixLLT()(i, i);
    if (!(l > 0.0) || !std::isfinite(l)) return std::nullopt;
    logdet += 2.0 * std::log(l);
  }
  const Vec r = x - mean;
  const Vec y = L.solve(r);
  return -0.5 * (static_cast<double>(d) * kLog2Pi + logdet + y.squaredNorm());
}

}  // namespace

std::optional<double> mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                 const Eigen::MatrixXd& cov) {
  return logpdf_impl(x, mean, cov);
}

std::optional<double> gaussian_logpdf(const State& x, const State& mean, const StateCov& cov) {
  return logpdf_impl(x, mean, cov);
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace dcabc
