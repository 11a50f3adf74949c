#pragma once

#include <vector>

#include "dcabc/pen.hpp"
#include "dcabc/types.hpp"

namespace dcabc {

struct TrainingPair {
  Eigen::MatrixXd values;
  ParamVector theta;
  bool validation = false;
};

/// Dataset D of (forward trajectory, parameter) pairs.
class TrainingSet {
 public:
  /// Appends a chunk, sending round(val_fraction * size) of it to validation.
  /// Throws DomainError for trajectories not tagged Origin::Forward.
  void add_chunk(const std::vector<Trajectory>& trajectories, const std::vector<ParamVector>& thetas, Engine& rng,
                 double val_fraction = 0.2);
  /// Appends one pair with its split already decided.
  void add(TrainingPair pair);

  std::size_t size() const noexcept { return pairs_.size(); }
  const TrainingPair& operator[](std::size_t i) const { return pairs_[i]; }
  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> validation_indices() const;
  Eigen::Index trajectory_length() const noexcept { return length_; }

 private:
  std::vector<TrainingPair> pairs_;
  Eigen::Index length_ = 0;
};

struct TrainConfig {
  int max_epochs = 1000;
  int patience = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 256;

  void validate() const;
};

struct TrainReport {
  struct Row {
    int epoch;
    double train_mse;
    double val_mse;
  };
  std::vector<Row> trace;  // epoch 0 holds the starting weights
  int best_epoch = 0;
  double best_val_mse = 0.0;
};

/// Adam on minibatch MSE in standardized units with early stopping; the
/// network ends at the best validation snapshot. With `fit_standardization`
/// the input and target scalers are refit on the training portion first,
/// otherwise the network's current scalers are kept (warm start).
TrainReport train(PenNetwork& net, const TrainingSet& data, const TrainConfig& config, StreamKey key,
                  bool fit_standardization);

/// MSE over the given pairs in the network's standardized target units.
double dataset_mse(const PenNetwork& net, const TrainingSet& data, const std::vector<std::size_t>& indices);

enum class StabilityDecision { Freeze, Continue };

inline constexpr double kStabilityMargin = 0.01;

/// Freeze when the new network is worse or less than 1% better than the
/// previous one on the expanded validation set.
StabilityDecision stability_stopping(const PenNetwork& previous, const PenNetwork& current, const TrainingSet& data);
StabilityDecision stability_rule(double previous_mse, double current_mse);

/// Binary dataset file: "DCDATA" magic, version byte, u64 count, rows, dim
/// and parameter count, then per pair a u8 validation flag, the values row by
/// row and theta, all float64.
void save_training_set(const std::filesystem::path& path, const TrainingSet& data);
TrainingSet load_training_set(const std::filesystem::path& path);

void write_training_trace(const std::filesystem::path& path, const TrainReport& report);

}  // namespace dcabc
