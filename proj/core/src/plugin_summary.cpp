#include "dcabc/plugin_summary.hpp"

#include <cmath>

#include "dcabc/error.hpp"

namespace dcabc {

namespace {

void require(const std::string& name) {
  if (name != "basic") throw DomainError("unknown plugin summary '" + name + "'");
}

}  // namespace

int plugin_summary_dim(const std::string& name, int state_dim) {
  require(name);
  return 4 * state_dim;
}

std::vector<std::string> plugin_summary_names() { return {"basic"}; }

Eigen::VectorXd plugin_summary(const std::string& name, const Eigen::MatrixXd& x) {
  require(name);
  const Eigen::Index n = x.rows();
  if (n < 2) throw DomainError("plugin summary needs at least two time points");
  Eigen::VectorXd s(4 * x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c).array();
    const double mean = col.mean();
    const Eigen::ArrayXd centered = col - mean;
    const double var = centered.square().mean();
    double acf = 0.0;
    if (var > 0.0) acf = (centered.head(n - 1) * centered.tail(n - 1)).sum() / (static_cast<double>(n) * var);
    const double incr = (col.tail(n - 1) - col.head(n - 1)).abs().mean();
    s.segment(4 * c, 4) << mean, std::sqrt(var), acf, incr;
  }
  return s;
}

}  // namespace dcabc
