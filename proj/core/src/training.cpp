#include "dcabc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "dcabc/binary_io.hpp"
#include "dcabc/csv.hpp"
#include "dcabc/error.hpp"

namespace dcabc {

void TrainingSet::add_chunk(const std::vector<Trajectory>& trajectories, const std::vector<ParamVector>& thetas,
                            Engine& rng, double val_fraction) {
  if (trajectories.size() != thetas.size()) throw DomainError("training chunk: trajectory/parameter count mismatch");
  for (const auto& t : trajectories) {
    if (t.origin != Origin::Forward) throw DomainError("training set accepts forward trajectories only");
    if (t.resolution != Resolution::Coarse) throw DomainError("training set stores coarse trajectories");
    if (length_ == 0) length_ = t.length();
    if (t.length() != length_) throw DomainError("training trajectories must share one length");
  }
  std::vector<std::size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(order.size())));
  std::vector<bool> is_val(order.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    pairs_.push_back({trajectories[i].values, thetas[i], is_val[i]});
}

void TrainingSet::add(TrainingPair pair) {
  if (length_ == 0) length_ = pair.values.rows();
  if (pair.values.rows() != length_) throw DomainError("training trajectories must share one length");
  if (!pairs_.empty() && (pair.values.cols() != pairs_.front().values.cols() ||
                          pair.theta.size() != pairs_.front().theta.size()))
    throw DomainError("training pair dimensions differ from the dataset");
  pairs_.push_back(std::move(pair));
}

std::vector<std::size_t> TrainingSet::train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pairs_.size(); ++i)
    if (!pairs_[i].validation) out.push_back(i);
  return out;
}

std::vector<std::size_t> TrainingSet::validation_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pairs_.size(); ++i)
    if (pairs_[i].validation) out.push_back(i);
  return out;
}

void TrainConfig::validate() const {
  if (max_epochs < 0 || patience < 1 || !(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0) || batch_size < 1)
    throw DomainError("invalid training configuration");
}

namespace {

constexpr std::size_t kEvalBatch = 512;

Eigen::MatrixXd targets_for(const PenNetwork& net, const TrainingSet& data, const std::size_t* idx, std::size_t n) {
  Eigen::MatrixXd t(net.architecture().output_dim, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) t.col(static_cast<Eigen::Index>(i)) = net.standardize_target(data[idx[i]].theta);
  return t;
}

std::vector<const Eigen::MatrixXd*> inputs_for(const TrainingSet& data, const std::size_t* idx, std::size_t n) {
  std::vector<const Eigen::MatrixXd*> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = &data[idx[i]].values;
  return xs;
}

void fit_scalers(PenNetwork& net, const TrainingSet& data, const std::vector<std::size_t>& train) {
  const int d = net.architecture().state_dim;
  const int p = net.architecture().output_dim;
  // Streaming moments over every state of every training trajectory.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  double count = 0.0;
  Eigen::MatrixXd thetas(static_cast<Eigen::Index>(train.size()), p);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& pair = data[train[i]];
    sum += pair.values.colwise().sum().transpose();
    sq += pair.values.array().square().matrix().colwise().sum().transpose();
    count += static_cast<double>(pair.values.rows());
    thetas.row(static_cast<Eigen::Index>(i)) = pair.theta.transpose();
  }
  Standardizer in;
  in.mean = sum / count;
  in.scale.resize(d);
  for (int c = 0; c < d; ++c) {
    const double sd = std::sqrt(std::max(sq[c] / count - in.mean[c] * in.mean[c], 0.0));
    in.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(in.mean[c])) ? sd : 1.0;
  }
  net.input_standardizer() = in;
  net.target_standardizer() = Standardizer::fit(thetas);
}

}  // namespace

double dataset_mse(const PenNetwork& net, const TrainingSet& data, const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, indices.size() - start);
    const auto xs = inputs_for(data, indices.data() + start, n);
    total += net.loss_and_gradient(xs, targets_for(net, data, indices.data() + start, n), nullptr) *
             static_cast<double>(n);
  }
  return total / static_cast<double>(indices.size());
}

TrainReport train(PenNetwork& net, const TrainingSet& data, const TrainConfig& config, StreamKey key,
                  bool fit_standardization) {
  config.validate();
  std::vector<std::size_t> train_idx = data.train_indices();
  const std::vector<std::size_t> val_idx = data.validation_indices();
  if (train_idx.empty()) throw DomainError("training set has no training pairs");
  if (fit_standardization) fit_scalers(net, data, train_idx);
  net.set_expected_length(static_cast<int>(data.trajectory_length()));
  const auto& monitor = val_idx.empty() ? train_idx : val_idx;

  TrainReport report;
  const double start_train = dataset_mse(net, data, train_idx);
  const double start_val = dataset_mse(net, data, monitor);
  report.trace.push_back({0, start_train, start_val});
  report.best_val_mse = std::isfinite(start_val) ? start_val : std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = net.params();

  const auto np = net.params().size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(np), v = Eigen::VectorXd::Zero(np), grad(np);
  long step = 0;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Engine rng = key.child(static_cast<std::uint64_t>(epoch)).engine();
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      const std::size_t n = std::min(batch, train_idx.size() - start);
      const auto xs = inputs_for(data, train_idx.data() + start, n);
      const double loss = net.loss_and_gradient(xs, targets_for(net, data, train_idx.data() + start, n), &grad);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(n);
      ++step;
      m = config.beta1 * m + (1.0 - config.beta1) * grad;
      v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      net.params().array() -=
          config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
    }
    const double val = dataset_mse(net, data, monitor);
    if (!std::isfinite(val)) throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch));
    report.trace.push_back({epoch, epoch_loss / static_cast<double>(train_idx.size()), val});
    if (val < report.best_val_mse) {
      report.best_val_mse = val;
      report.best_epoch = epoch;
      best = net.params();
    } else if (epoch - report.best_epoch >= config.patience) {
      break;
    }
  }
  net.params() = best;
  return report;
}

StabilityDecision stability_rule(double previous_mse, double current_mse) {
  return current_mse > (1.0 - kStabilityMargin) * previous_mse ? StabilityDecision::Freeze
                                                               : StabilityDecision::Continue;
}

StabilityDecision stability_stopping(const PenNetwork& previous, const PenNetwork& current, const TrainingSet& data) {
  const auto idx = data.validation_indices();
  if (idx.empty()) return StabilityDecision::Continue;
  // Compare both networks in the current network's target units.
  double prev = 0.0, cur = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, idx.size() - start);
    const auto xs = inputs_for(data, idx.data() + start, n);
    const Eigen::MatrixXd pp = previous.forward_batch(xs);
    const Eigen::MatrixXd pc = current.forward_batch(xs);
    const auto& scale = current.target_standardizer().scale;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& theta = data[idx[start + i]].theta;
      prev += ((pp.col(static_cast<Eigen::Index>(i)) - theta).array() / scale.array()).square().sum();
      cur += ((pc.col(static_cast<Eigen::Index>(i)) - theta).array() / scale.array()).square().sum();
    }
  }
  return stability_rule(prev, cur);
}

namespace {
constexpr char kDataMagic[6] = {'D', 'C', 'D', 'A', 'T', 'A'};
constexpr unsigned char kDataVersion = 1;
}  // namespace

void save_training_set(const std::filesystem::path& path, const TrainingSet& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kDataMagic, sizeof kDataMagic);
  binio::put_u8(out, kDataVersion);
  const std::size_t n = data.size();
  const Eigen::Index dim = n ? data[0].values.cols() : 0;
  const Eigen::Index p = n ? data[0].theta.size() : 0;
  binio::put_u64(out, n);
  binio::put_u64(out, static_cast<std::uint64_t>(data.trajectory_length()));
  binio::put_u64(out, static_cast<std::uint64_t>(dim));
  binio::put_u64(out, static_cast<std::uint64_t>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pair = data[i];
    binio::put_u8(out, pair.validation ? 1 : 0);
    for (Eigen::Index r = 0; r < pair.values.rows(); ++r)
      for (Eigen::Index c = 0; c < dim; ++c) binio::put_f64(out, pair.values(r, c));
    for (Eigen::Index k = 0; k < p; ++k) binio::put_f64(out, pair.theta[k]);
  }
  if (!out) throw Error("write failed for " + path.string());
}

TrainingSet load_training_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[sizeof kDataMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kDataMagic))
    throw Error(path.string() + " is not a training dataset file");
  if (const auto v = binio::get_u8(in); v != kDataVersion)
    throw Error(path.string() + ": unsupported dataset version " + std::to_string(v));
  const auto n = binio::get_u64(in);
  const auto rows = static_cast<Eigen::Index>(binio::get_u64(in));
  const auto dim = static_cast<Eigen::Index>(binio::get_u64(in));
  const auto p = static_cast<Eigen::Index>(binio::get_u64(in));
  TrainingSet data;
  for (std::uint64_t i = 0; i < n; ++i) {
    TrainingPair pair;
    pair.validation = binio::get_u8(in) != 0;
    pair.values.resize(rows, dim);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) pair.values(r, c) = binio::get_f64(in);
    pair.theta.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) pair.theta[k] = binio::get_f64(in);
    data.add(std::move(pair));
  }
  return data;
}

void write_training_trace(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "epoch,train_mse,val_mse\n";
  for (const auto& r : report.trace)
    out << r.epoch << ',' << csv::format_double(r.train_mse) << ',' << csv::format_double(r.val_mse) << '\n';
}

}  // namespace dcabc
