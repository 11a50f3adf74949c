#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dcabc/models.hpp"
#include "dcabc/random.hpp"
#include "dcabc/time_grid.hpp"
#include "dcabc/trajectory.hpp"

namespace dcabc::test {

inline State state1(double x) {
  State s(1);
  s << x;
  return s;
}

inline Noise noise1(double z) {
  Noise n(1);
  n << z;
  return n;
}

inline ParamVector params(std::initializer_list<double> v) {
  ParamVector p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) { return params(v); }

/// Coarse 1-D trajectory with unit spacing.
inline Trajectory coarse1(const std::vector<double>& values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return make_coarse(TimeGrid::regular(0.0, 1.0, values.size() - 1, 1), std::move(m), Origin::Observed);
}

/// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(F f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace dcabc::test
