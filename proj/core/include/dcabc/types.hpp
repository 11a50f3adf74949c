#pragma once

#include <Eigen/Dense>

namespace dcabc {

inline constexpr int kMaxStateDim = 4;
inline constexpr int kMaxNoiseDim = 8;

// Small fixed-capacity vectors keep the per-step stepping code off the heap.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxStateDim, 1>;
using Noise = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxNoiseDim, 1>;
using DiffusionMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxStateDim, kMaxNoiseDim>;
using StateCov =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxStateDim, kMaxStateDim>;

/// Model parameter theta.
using ParamVector = Eigen::VectorXd;

}  // namespace dcabc
