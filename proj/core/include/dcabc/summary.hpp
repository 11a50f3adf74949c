#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcabc/models.hpp"
#include "dcabc/steppers.hpp"
#include "dcabc/training.hpp"

namespace dcabc {

/// Summary function S(x) on coarse trajectories.
class SummaryStatistic {
 public:
  virtual ~SummaryStatistic() = default;
  virtual int dim() const = 0;
  virtual Eigen::MatrixXd summarize_batch(const std::vector<const Eigen::MatrixXd*>& xs) const;
  Eigen::VectorXd summarize(const Trajectory& x) const { return summarize(x.values); }
  virtual Eigen::VectorXd summarize(const Eigen::MatrixXd& x) const = 0;
};

using SummaryPtr = std::shared_ptr<const SummaryStatistic>;

class FunctionSummary final : public SummaryStatistic {
 public:
  using Fn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
  FunctionSummary(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  using SummaryStatistic::summarize;
  Eigen::VectorXd summarize(const Eigen::MatrixXd& x) const override { return fn_(x); }

 private:
  int dim_;
  Fn fn_;
};

class PluginSummary final : public SummaryStatistic {
 public:
  PluginSummary(std::string name, int state_dim);
  int dim() const override { return dim_; }
  using SummaryStatistic::summarize;
  Eigen::VectorXd summarize(const Eigen::MatrixXd& x) const override;

 private:
  std::string name_;
  int dim_;
};

class PenSummary final : public SummaryStatistic {
 public:
  explicit PenSummary(std::shared_ptr<const PenNetwork> net) : net_(std::move(net)) {}
  int dim() const override { return net_->architecture().output_dim; }
  using SummaryStatistic::summarize;
  Eigen::VectorXd summarize(const Eigen::MatrixXd& x) const override;
  Eigen::MatrixXd summarize_batch(const std::vector<const Eigen::MatrixXd*>& xs) const override;
  const PenNetwork& network() const noexcept { return *net_; }

 private:
  std::shared_ptr<const PenNetwork> net_;
};

/// One retraining between sampler rounds.
struct RetrainEvent {
  int round = 0;
  bool retrained = false;
  bool froze = false;
  std::size_t dataset_size = 0;
  TrainReport report;
};

/// The summary function S_t used by the sampler, updated at round boundaries.
class SummarySchedule {
 public:
  virtual ~SummarySchedule() = default;
  virtual SummaryPtr current() const = 0;
  /// Appends the round's accepted (forward trajectory, theta) pairs to D.
  virtual void append(const std::vector<Trajectory>& trajectories, const std::vector<ParamVector>& thetas) = 0;
  /// Retrains on D unless frozen; returns the event for logging.
  virtual RetrainEvent retrain(int round) = 0;
  virtual bool learned() const { return false; }
};

/// Summary function that never changes.
class FixedSummaries final : public SummarySchedule {
 public:
  explicit FixedSummaries(SummaryPtr summary) : summary_(std::move(summary)) {}
  SummaryPtr current() const override { return summary_; }
  void append(const std::vector<Trajectory>&, const std::vector<ParamVector>&) override {}
  RetrainEvent retrain(int round) override {
    RetrainEvent e;
    e.round = round;
    return e;
  }

 private:
  SummaryPtr summary_;
};

struct LearnedSummaryConfig {
  TrainConfig retrain;
  bool stability_rule = true;
  double val_fraction = 0.2;
};

/// PEN retrained on the growing dataset D with warm starts and fixed
/// standardization; optionally frozen by the stability rule.
class LearnedPenSummaries final : public SummarySchedule {
 public:
  LearnedPenSummaries(PenNetwork pretrained, TrainingSet data, LearnedSummaryConfig config, StreamKey key);

  SummaryPtr current() const override { return summary_; }
  void append(const std::vector<Trajectory>& trajectories, const std::vector<ParamVector>& thetas) override;
  RetrainEvent retrain(int round) override;
  bool learned() const override { return true; }

  bool frozen() const noexcept { return frozen_; }
  const TrainingSet& dataset() const noexcept { return data_; }
  std::shared_ptr<const PenNetwork> network() const noexcept { return net_; }

 private:
  std::shared_ptr<const PenNetwork> net_;
  SummaryPtr summary_;
  TrainingSet data_;
  LearnedSummaryConfig config_;
  StreamKey key_;
  bool frozen_ = false;
  std::uint64_t chunks_ = 0;
};

struct PretrainResult {
  PenNetwork network;
  TrainingSet data;
  TrainReport report;
};

/// R prior-predictive pairs (theta ~ prior, forward trajectory at theta),
/// split 80/20, and a freshly initialized PEN trained on them.
PretrainResult pretrain_pen(const SdeModel& model, const TimeGrid& grid, const State& x0, std::size_t samples,
                            const PenArchitecture& arch, const TrainConfig& config, Scheme scheme, StreamKey key);

/// Prior-predictive dataset only.
TrainingSet prior_predictive(const SdeModel& model, const TimeGrid& grid, const State& x0, std::size_t samples,
                             Scheme scheme, StreamKey key, double val_fraction = 0.2);

}  // namespace dcabc
