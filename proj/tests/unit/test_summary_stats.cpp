#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dcabc/error.hpp"
#include "dcabc/pen.hpp"
#include "dcabc/plugin_summary.hpp"
#include "dcabc/summary.hpp"
#include "dcabc/training.hpp"
#include "helpers.hpp"

using namespace dcabc;
using namespace dcabc::test;

namespace {

PenArchitecture small_arch(int output_dim = 2) {
  PenArchitecture a;
  a.inner_hidden = 6;
  a.representation = 5;
  a.outer_hidden = 7;
  a.output_dim = output_dim;
  return a;
}

PenNetwork random_net(const PenArchitecture& arch, std::uint64_t seed) {
  PenNetwork net(arch);
  Engine rng(seed);
  net.initialize(rng);
  // Non-zero biases so every parameter takes part in the check.
  std::normal_distribution<double> n(0.0, 0.3);
  for (Eigen::Index i = 0; i < net.params().size(); ++i)
    if (net.params()[i] == 0.0) net.params()[i] = n(rng);
  return net;
}

/// theta = 0.3 * sum of consecutive-pair products + small noise.
TrainingSet pair_sum_task(std::size_t count, int length, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  TrainingSet data;
  for (std::size_t i = 0; i < count; ++i) {
    TrainingPair pair;
    pair.values.resize(length, 1);
    for (int k = 0; k < length; ++k) pair.values(k, 0) = n(rng);
    double s = 0.0;
    for (int k = 0; k + 1 < length; ++k) s += pair.values(k, 0) * pair.values(k + 1, 0);
    pair.theta = params({0.3 * s + 0.1 * n(rng)});
    pair.validation = i % 5 == 4;
    data.add(std::move(pair));
  }
  return data;
}

}  // namespace

TEST_CASE("PEN gradient matches central differences on every layer") {
  const PenArchitecture arch = small_arch();
  const PenNetwork net = random_net(arch, 3);
  Eigen::MatrixXd x1(5, 1), x2(5, 1);
  x1 << 0.3, -1.2, 0.8, 2.0, -0.4;
  x2 << 1.1, 0.2, -0.7, 0.5, 1.9;
  const std::vector<const Eigen::MatrixXd*> xs{&x1, &x2};
  Eigen::MatrixXd targets(2, 2);
  targets << 0.5, -1.0, 1.5, 0.2;
  Eigen::VectorXd grad;
  (void)net.loss_and_gradient(xs, targets, &grad);

  PenNetwork probe = net;
  const double step = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < net.params().size(); ++i) {
    probe.params()[i] = net.params()[i] + step;
    const double up = probe.loss_and_gradient(xs, targets, nullptr);
    probe.params()[i] = net.params()[i] - step;
    const double down = probe.loss_and_gradient(xs, targets, nullptr);
    probe.params()[i] = net.params()[i];
    const double fd = (up - down) / (2 * step);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[i]) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("PEN output is invariant under block switches") {
  const PenNetwork net = random_net(small_arch(), 5);
  Eigen::MatrixXd a(5, 1), b(5, 1);
  a << 0.4, 1.3, 0.4, -0.9, 0.4;
  b << 0.4, -0.9, 0.4, 1.3, 0.4;
  CHECK((net.forward_batch({&a}) - net.forward_batch({&b})).cwiseAbs().maxCoeff() < 1e-12);

  // Random permutations of the excursions from a shared value keep the first
  // state and the multiset of consecutive pairs.
  Engine rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> bumps(8);
    for (double& v : bumps) v = n(rng);
    const double hub = n(rng);
    auto build = [&](const std::vector<double>& bs) {
      Eigen::MatrixXd x(2 * static_cast<Eigen::Index>(bs.size()) + 1, 1);
      for (std::size_t k = 0; k < bs.size(); ++k) {
        x(2 * static_cast<Eigen::Index>(k), 0) = hub;
        x(2 * static_cast<Eigen::Index>(k) + 1, 0) = bs[k];
      }
      x(x.rows() - 1, 0) = hub;
      return x;
    };
    const Eigen::MatrixXd x = build(bumps);
    std::shuffle(bumps.begin(), bumps.end(), rng);
    const Eigen::MatrixXd y = build(bumps);
    CHECK((net.forward_batch({&x}) - net.forward_batch({&y})).cwiseAbs().maxCoeff() < 1e-12);
  }
  // A genuine change in the pairs does change the output.
  Eigen::MatrixXd c = a;
  c(2, 0) = 0.5;
  CHECK((net.forward_batch({&a}) - net.forward_batch({&c})).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("zero-weight PEN returns the de-standardized output bias") {
  PenArchitecture arch = small_arch(2);
  PenNetwork net(arch);
  const auto layers = arch.layers();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l)
    offset += static_cast<std::size_t>(layers[l].in * layers[l].out + layers[l].out);
  offset += static_cast<std::size_t>(layers.back().in * layers.back().out);
  net.params()[static_cast<Eigen::Index>(offset)] = 0.5;
  net.params()[static_cast<Eigen::Index>(offset) + 1] = -2.0;
  net.target_standardizer() = {vec({1.0, 10.0}), vec({2.0, 3.0})};
  const auto out = net.forward(coarse1({0.1, 0.2, 0.3}));
  CHECK(out[0] == doctest::Approx(1.0 + 0.5 * 2.0));
  CHECK(out[1] == doctest::Approx(10.0 - 2.0 * 3.0));
}

TEST_CASE("target standardization round trip") {
  PenNetwork net(small_arch(3));
  net.target_standardizer() = {vec({1e-7, 3.0, -2.0}), vec({4e-8, 0.5, 7.0})};
  const Eigen::VectorXd v = vec({2.2e-7, 3.7, 11.0});
  CHECK((net.destandardize_target(net.standardize_target(v)) - v).cwiseAbs().maxCoeff() <= 1e-12 * 11.0);
  const auto s = Standardizer::fit((Eigen::MatrixXd(4, 2) << 1, 5, 2, 5, 3, 5, 4, 5).finished());
  CHECK(s.mean[0] == 2.5);
  CHECK(s.scale[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.scale[1] == 1.0);  // constant column keeps unit scale
}

TEST_CASE("PEN input checks and file round trip") {
  PenNetwork net = random_net(small_arch(), 1);
  net.set_expected_length(4);
  CHECK_THROWS_AS((void)net.forward(coarse1({1, 2, 3})), DomainError);
  CHECK_THROWS_AS((void)net.forward(coarse1({1})), DomainError);
  net.input_standardizer() = {vec({0.3}), vec({2.0})};
  net.target_standardizer() = {vec({1, 2}), vec({3, 4})};
  const auto path = std::filesystem::temp_directory_path() / "dcabc_unit_pen.pen";
  net.save(path);
  const PenNetwork back = PenNetwork::load(path);
  std::filesystem::remove(path);
  CHECK(back.params() == net.params());
  CHECK(back.expected_length() == 4);
  const auto x = coarse1({0.1, -0.4, 2.0, 1.0});
  CHECK(back.forward(x) == net.forward(x));
}

TEST_CASE("batched and single PEN evaluation agree") {
  const PenNetwork net = random_net(small_arch(), 2);
  Eigen::MatrixXd a(6, 1), b(6, 1);
  a.setRandom();
  b.setRandom();
  const Eigen::MatrixXd both = net.forward_batch({&a, &b});
  CHECK((both.col(1) - net.forward_batch({&b}).col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("PEN learns the pair-sum regression well below the constant baseline") {
  const TrainingSet data = pair_sum_task(3000, 10, 21);
  PenArchitecture arch;
  arch.inner_hidden = 40;
  arch.representation = 20;
  arch.outer_hidden = 40;
  PenNetwork net(arch);
  Engine init(4);
  net.initialize(init);
  TrainConfig cfg;
  cfg.max_epochs = 150;
  cfg.patience = 30;
  cfg.batch_size = 64;
  cfg.learning_rate = 3e-3;
  const TrainReport report = train(net, data, cfg, StreamKey(9), true);

  const auto val = data.validation_indices();
  double mean = 0.0;
  for (auto i : val) mean += data[i].theta[0];
  mean /= static_cast<double>(val.size());
  double baseline = 0.0, mse = 0.0;
  for (auto i : val) {
    baseline += std::pow(data[i].theta[0] - mean, 2);
    mse += std::pow(net.forward_batch({&data[i].values})(0, 0) - data[i].theta[0], 2);
  }
  CHECK(mse < 0.25 * baseline);

  SUBCASE("returned weights are the best recorded checkpoint") {
    double best = INFINITY;
    for (const auto& row : report.trace) best = std::min(best, row.val_mse);
    CHECK(report.best_val_mse == doctest::Approx(best).epsilon(1e-12));
    CHECK(dataset_mse(net, data, val) == doctest::Approx(best).epsilon(1e-10));
  }

  SUBCASE("warm-started retraining on an extended set keeps the old validation loss") {
    const double old_loss = dataset_mse(net, data, val);
    TrainingSet extended = data;
    const TrainingSet chunk = pair_sum_task(600, 10, 22);
    for (std::size_t i = 0; i < chunk.size(); ++i) extended.add(chunk[i]);
    TrainConfig re = cfg;
    re.max_epochs = 20;
    re.patience = 5;
    (void)train(net, extended, re, StreamKey(10), false);
    CHECK(dataset_mse(net, data, val) <= old_loss * 1.1);
  }
}

TEST_CASE("training is deterministic given the key") {
  const TrainingSet data = pair_sum_task(300, 6, 1);
  PenNetwork a(small_arch(1)), b(small_arch(1));
  Engine r1(2), r2(2);
  a.initialize(r1);
  b.initialize(r2);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.batch_size = 32;
  (void)train(a, data, cfg, StreamKey(3), true);
  (void)train(b, data, cfg, StreamKey(3), true);
  CHECK(a.params() == b.params());
}

TEST_CASE("training set bookkeeping") {
  TrainingSet set;
  Engine rng(1);
  std::vector<Trajectory> trs;
  std::vector<ParamVector> th;
  for (int i = 0; i < 10; ++i) {
    auto t = coarse1({0.0, 1.0 * i, 2.0});
    t.origin = Origin::Forward;
    trs.push_back(t);
    th.push_back(params({1.0 * i}));
  }
  set.add_chunk(trs, th, rng, 0.2);
  CHECK(set.size() == 10);
  CHECK(set.validation_indices().size() == 2);
  CHECK(set.train_indices().size() == 8);
  trs[0].origin = Origin::Backward;
  CHECK_THROWS_AS(set.add_chunk(trs, th, rng), DomainError);
  CHECK_THROWS_AS(set.add({Eigen::MatrixXd::Zero(4, 1), params({1}), false}), DomainError);

  const auto path = std::filesystem::temp_directory_path() / "dcabc_unit_set.bin";
  save_training_set(path, set);
  const TrainingSet back = load_training_set(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].values == set[i].values);
    CHECK(back[i].theta == set[i].theta);
    CHECK(back[i].validation == set[i].validation);
  }
}

TEST_CASE("stability rule") {
  CHECK(stability_rule(1.0, 0.5) == StabilityDecision::Continue);
  CHECK(stability_rule(1.0, 0.995) == StabilityDecision::Freeze);
  CHECK(stability_rule(1.0, 1.2) == StabilityDecision::Freeze);
  const TrainingSet data = pair_sum_task(50, 5, 3);
  const PenNetwork net = random_net(small_arch(1), 4);
  CHECK(stability_stopping(net, net, data) == StabilityDecision::Freeze);
}

TEST_CASE("plugin summaries") {
  const auto c = plugin_summary("basic", coarse1({2.5, 2.5, 2.5, 2.5}));
  REQUIRE(c.size() == 4);
  CHECK(c[0] == 2.5);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == 0.0);
  CHECK(c[3] == 0.0);

  const auto alt = plugin_summary("basic", coarse1({0, 1, 0, 1, 0, 1, 0, 1}));
  CHECK(alt[0] == doctest::Approx(0.5));
  CHECK(alt[1] == doctest::Approx(0.5));
  CHECK(alt[3] == doctest::Approx(1.0));
  CHECK(alt[2] < 0.0);

  std::vector<double> ramp(501);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto r = plugin_summary("basic", coarse1(ramp));
  CHECK(r[2] > 0.99);
  CHECK(r[2] < 1.0);

  Eigen::MatrixXd two(3, 2);
  two << 1, 10, 2, 10, 3, 10;
  const auto m = plugin_summary("basic", two);
  CHECK(m.size() == plugin_summary_dim("basic", 2));
  CHECK(m[0] == doctest::Approx(2.0));
  CHECK(m[4] == doctest::Approx(10.0));
  CHECK_THROWS_AS((void)plugin_summary("nope", two), DomainError);
}

TEST_CASE("learned summaries reject backward trajectories and retrain on forward ones") {
  const TrainingSet data = pair_sum_task(300, 6, 5);
  PenNetwork net(small_arch(1));
  Engine rng(1);
  net.initialize(rng);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.batch_size = 32;
  (void)train(net, data, cfg, StreamKey(1), true);
  LearnedSummaryConfig lc;
  lc.retrain = cfg;
  LearnedPenSummaries sched(net, data, lc, StreamKey(2));
  auto good = coarse1({0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  good.origin = Origin::Forward;
  auto bad = good;
  bad.origin = Origin::Backward;
  CHECK_THROWS_AS(sched.append({bad}, {params({1})}), DomainError);
  sched.append({good, good, good, good, good}, std::vector<ParamVector>(5, params({1})));
  CHECK(sched.dataset().size() == 305);
  for (std::size_t i = 0; i < sched.dataset().size(); ++i) CHECK(sched.dataset()[i].values.rows() == 6);
  const RetrainEvent ev = sched.retrain(2);
  CHECK(ev.round == 2);
  CHECK(ev.dataset_size == 305);
}
