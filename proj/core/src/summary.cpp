#include "dcabc/summary.hpp"

#include "dcabc/error.hpp"
#include "dcabc/plugin_summary.hpp"
#include "dcabc/simulate.hpp"

namespace dcabc {

Eigen::MatrixXd SummaryStatistic::summarize_batch(const std::vector<const Eigen::MatrixXd*>& xs) const {
  Eigen::MatrixXd out(dim(), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = summarize(*xs[i]);
  return out;
}

PluginSummary::PluginSummary(std::string name, int state_dim)
    : name_(std::move(name)), dim_(plugin_summary_dim(name_, state_dim)) {}

Eigen::VectorXd PluginSummary::summarize(const Eigen::MatrixXd& x) const { return plugin_summary(name_, x); }

Eigen::VectorXd PenSummary::summarize(const Eigen::MatrixXd& x) const { return summarize_batch({&x}).col(0); }

Eigen::MatrixXd PenSummary::summarize_batch(const std::vector<const Eigen::MatrixXd*>& xs) const {
  return net_->forward_batch(xs);
}

LearnedPenSummaries::LearnedPenSummaries(PenNetwork pretrained, TrainingSet data, LearnedSummaryConfig config,
                                         StreamKey key)
    : net_(std::make_shared<const PenNetwork>(std::move(pretrained))),
      summary_(std::make_shared<PenSummary>(net_)),
      data_(std::move(data)),
      config_(config),
      key_(key) {}

void LearnedPenSummaries::append(const std::vector<Trajectory>& trajectories, const std::vector<ParamVector>& thetas) {
  if (trajectories.empty()) return;
  Engine rng = key_.child(0).child(chunks_++).engine();
  data_.add_chunk(trajectories, thetas, rng, config_.val_fraction);
}

RetrainEvent LearnedPenSummaries::retrain(int round) {
  RetrainEvent event;
  event.round = round;
  event.dataset_size = data_.size();
  if (frozen_) return event;
  PenNetwork next = *net_;
  event.report = train(next, data_, config_.retrain, key_.child(1).child(static_cast<std::uint64_t>(round)), false);
  event.retrained = true;
  if (config_.stability_rule && stability_stopping(*net_, next, data_) == StabilityDecision::Freeze) {
    frozen_ = true;
    event.froze = true;
    // Keep whichever network did better on the expanded validation set.
    if (dataset_mse(next, data_, data_.validation_indices()) > dataset_mse(*net_, data_, data_.validation_indices()))
      return event;
  }
  net_ = std::make_shared<const PenNetwork>(std::move(next));
  summary_ = std::make_shared<PenSummary>(net_);
  return event;
}

TrainingSet prior_predictive(const SdeModel& model, const TimeGrid& grid, const State& x0, std::size_t samples,
                             Scheme scheme, StreamKey key, double val_fraction) {
  std::vector<Trajectory> trajs;
  std::vector<ParamVector> thetas;
  trajs.reserve(samples);
  thetas.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= 100) throw Error("prior predictive: repeated simulation failures");
      Engine rng = key.child(0).child(i).child(attempt).engine();
      ParamVector theta = model.prior().sample(rng);
      try {
        trajs.push_back(simulate_coarse(model, theta, grid, x0, scheme, rng));
        thetas.push_back(std::move(theta));
        break;
      } catch (const SimulationFailure&) {
      }
    }
  }
  TrainingSet data;
  Engine split = key.child(1).engine();
  data.add_chunk(trajs, thetas, split, val_fraction);
  return data;
}

PretrainResult pretrain_pen(const SdeModel& model, const TimeGrid& grid, const State& x0, std::size_t samples,
                            const PenArchitecture& arch, const TrainConfig& config, Scheme scheme, StreamKey key) {
  if (arch.output_dim != model.param_dim() || arch.state_dim != model.state_dim())
    throw DomainError("PEN architecture does not match the model");
  PretrainResult out{PenNetwork(arch), prior_predictive(model, grid, x0, samples, scheme, key.child(0)), {}};
  Engine init = key.child(1).engine();
  out.network.initialize(init);
  out.report = train(out.network, out.data, config, key.child(2), true);
  return out;
}

}  // namespace dcabc
