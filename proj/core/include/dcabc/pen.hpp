#pragma once

#include <filesystem>
#include <vector>

#include "dcabc/random.hpp"
#include "dcabc/trajectory.hpp"

namespace dcabc {

/// Inner phi: (order+1)*D -> hidden -> hidden -> representation.
/// Outer rho: order*D + representation -> outer_hidden -> output.
struct PenArchitecture {
  int state_dim = 1;
  int markov_order = 1;
  int inner_hidden = 100;
  int representation = 100;
  int outer_hidden = 100;
  int output_dim = 1;

  struct Layer {
    int in;
    int out;
  };
  std::vector<Layer> layers() const;
  std::size_t parameter_count() const;
  void validate() const;
};

/// Per-coordinate affine standardization.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  bool empty() const noexcept { return mean.size() == 0; }
  static Standardizer fit(const Eigen::MatrixXd& rows);  // one observation per row
  static Standardizer identity(Eigen::Index dim);
};

/// Forward activations kept for backpropagation.
struct PenWorkspace {
  Eigen::MatrixXd a0, z1, a1, z2, a2, phi, u, g1, h, out;
};

/// Partially exchangeable network regressing theta on a coarse trajectory.
/// Windows are pooled by their mean, so the output depends on the first
/// `markov_order` states and on the multiset of (order+1)-windows only.
class PenNetwork {
 public:
  PenNetwork() = default;
  explicit PenNetwork(PenArchitecture arch);

  /// Weights ~ N(0, 2/fan_in) on ReLU layers, N(0, 1/fan_in) on output layers; zero biases.
  void initialize(Engine& rng);

  const PenArchitecture& architecture() const noexcept { return arch_; }
  Eigen::VectorXd& params() noexcept { return params_; }
  const Eigen::VectorXd& params() const noexcept { return params_; }

  Standardizer& input_standardizer() noexcept { return input_; }
  const Standardizer& input_standardizer() const noexcept { return input_; }
  Standardizer& target_standardizer() noexcept { return target_; }
  const Standardizer& target_standardizer() const noexcept { return target_; }

  /// Number of rows every input must have; 0 accepts any length.
  int expected_length() const noexcept { return expected_length_; }
  void set_expected_length(int n) noexcept { expected_length_ = n; }

  /// Summary in parameter units.
  Eigen::VectorXd forward(const Trajectory& x) const;
  /// One column per trajectory, parameter units.
  Eigen::MatrixXd forward_batch(const std::vector<const Eigen::MatrixXd*>& xs) const;
  /// Same, before the target de-standardization.
  Eigen::MatrixXd forward_batch_standardized(const std::vector<const Eigen::MatrixXd*>& xs) const;

  /// Standardized-space predictions (output_dim x batch), filling `ws`.
  Eigen::MatrixXd predict_standardized(const std::vector<const Eigen::MatrixXd*>& xs, PenWorkspace& ws) const;

  /// Mean squared error over all entries against standardized targets; the
  /// gradient with respect to params() is written to `grad` when non-null.
  double loss_and_gradient(const std::vector<const Eigen::MatrixXd*>& xs, const Eigen::MatrixXd& targets_std,
                           Eigen::VectorXd* grad) const;

  Eigen::VectorXd standardize_target(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd destandardize_target(const Eigen::VectorXd& z) const;

  void save(const std::filesystem::path& path) const;
  static PenNetwork load(const std::filesystem::path& path);

 private:
  void check_input(const Eigen::MatrixXd& x) const;

  PenArchitecture arch_;
  Eigen::VectorXd params_;
  Standardizer input_;
  Standardizer target_;
  int expected_length_ = 0;
};

inline constexpr unsigned char kPenFileVersion = 1;

}  // namespace dcabc
