#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dcabc/abc_smc.hpp"
#include "dcabc/evaluation.hpp"
#include "dcabc/plugin_summary.hpp"
#include "dcabc/simulate.hpp"
#include "dcabc/summary.hpp"
#include "helpers.hpp"

using namespace dcabc;
using namespace dcabc::test;

namespace {

Population population(std::initializer_list<double> xs, std::initializer_list<double> ws) {
  Population p;
  p.particles.resize(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p.particles(i++, 0) = x;
  p.weights = vec(ws);
  p.log_weights = p.weights.array().log();
  return p;
}

/// dX = mu dt + dB: the final state over its time is sufficient for mu.
std::shared_ptr<FunctionalModel> drift_bm() {
  return std::make_shared<FunctionalModel>(
      "drift-bm", 1, 1, std::vector<std::string>{"mu"},
      [](const State&, const ParamVector& t) { return State::Constant(1, t[0]); },
      [](const State&, const ParamVector&) { return DiffusionMatrix::Ones(1, 1); }, PriorBox(vec({-5}), vec({5})));
}

}  // namespace

TEST_CASE("perturbation covariance") {
  const Eigen::MatrixXd c = perturb_cov(population({0, 2}, {0.5, 0.5}));
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(1e-12));

  const Eigen::MatrixXd z = perturb_cov(population({1.5, 1.5, 1.5}, {0.2, 0.3, 0.5}));
  CHECK(z(0, 0) > 0.0);
  CHECK(z(0, 0) < 1e-8);

  Population p;
  p.particles = (Eigen::MatrixXd(3, 2) << 0, 1, 2, 5, 4, 3).finished();
  p.weights = vec({0.2, 0.5, 0.3});
  Population q = p;
  q.particles *= 3.0;
  CHECK((perturb_cov(q) - 9.0 * perturb_cov(p)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd wc = weighted_covariance(p.particles, p.weights);
  CHECK((wc - wc.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("proposals") {
  const PriorBox box(vec({-10}), vec({10}));
  Engine rng(2);
  const Population single = population({1.25, 3.0}, {1.0, 0.0});
  const PerturbationKernel none(Eigen::MatrixXd::Zero(1, 1));
  for (int i = 0; i < 20; ++i) CHECK((*propose(single, none, box, rng))[0] == 1.25);

  const Population pop = population({-1.0, 0.5, 2.0}, {0.2, 0.5, 0.3});
  const PerturbationKernel small(Eigen::MatrixXd::Constant(1, 1, 0.01));
  double s = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) s += (*propose(pop, small, box, rng))[0];
  const double weighted_mean = -0.2 + 0.25 + 0.6;
  // Standard error of the mixture mean is below 0.004.
  CHECK(std::abs(s / draws - weighted_mean) < 0.015);

  const PriorBox tight(vec({100}), vec({101}));
  CHECK_FALSE(propose(pop, small, tight, rng, 5).has_value());

  const PerturbationKernel wide(Eigen::MatrixXd::Constant(1, 1, 25.0));
  for (int i = 0; i < 200; ++i) CHECK(box.contains(*propose(pop, wide, box, rng)));
}

TEST_CASE("adaptive threshold") {
  std::vector<double> d(10);
  std::iota(d.begin(), d.end(), 1.0);
  std::reverse(d.begin(), d.end());
  CHECK(adaptive_threshold(d, 0.5) == 5.0);
  CHECK(adaptive_threshold(d, 0.999999) == 10.0);
  CHECK(adaptive_threshold({3.5}, 0.5) == 3.5);
  CHECK(adaptive_threshold(d, 0.75) == 8.0);
}

TEST_CASE("forward importance weights") {
  const PriorBox box(vec({-10}), vec({10}));
  const Population prev = population({0.0, 1.0}, {0.25, 0.75});
  const double var = 0.5;
  const PerturbationKernel kernel(Eigen::MatrixXd::Constant(1, 1, var));
  const double theta = 0.4;
  auto normal = [&](double x, double m) { return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2 * M_PI * var); };
  const double mixture = 0.25 * normal(theta, 0.0) + 0.75 * normal(theta, 1.0);
  CHECK(smc_weight_forward(params({theta}), prev, kernel, box) ==
        doctest::Approx(std::log(1.0 / 20.0) - std::log(mixture)).epsilon(1e-12));

  const Population sym = population({-1.0, 1.0}, {0.5, 0.5});
  // Between two symmetric modes the kernel mixture is lowest at the center.
  const double centre = smc_weight_forward(params({0.0}), sym, kernel, box);
  for (double t : {-0.9, -0.5, 0.3, 0.9}) CHECK(centre >= smc_weight_forward(params({t}), sym, kernel, box));
  CHECK(smc_weight_forward(params({20.0}), sym, kernel, box) == -INFINITY);
}

TEST_CASE("data-conditional importance weights") {
  const PriorBox box(vec({0}), vec({4}));
  SlEstimate a, b;
  a.log_ratio = 0.0;
  b.log_ratio = -1.0;
  const Eigen::VectorXd lw = vec({smc_weight_dc(params({1}), nullptr, nullptr, box, a),
                                  smc_weight_dc(params({2}), nullptr, nullptr, box, b)});
  const Eigen::VectorXd w = normalize_log_weights(lw);
  CHECK(std::abs(w[0] - std::exp(1.0) / (std::exp(1.0) + 1.0)) < 1e-9);
  CHECK(std::abs(w[1] - 1.0 / (std::exp(1.0) + 1.0)) < 1e-9);
  CHECK(w[0] == doctest::Approx(0.731).epsilon(1e-3));

  const Population prev = population({1.0, 2.0}, {0.5, 0.5});
  const PerturbationKernel kernel(Eigen::MatrixXd::Constant(1, 1, 0.3));
  CHECK(smc_weight_dc(params({1.4}), &prev, &kernel, box, a) == smc_weight_forward(params({1.4}), prev, kernel, box));

  SlEstimate clipped;
  clipped.status = SlStatus::Clipped;
  const Eigen::VectorXd with_clip =
      normalize_log_weights(vec({smc_weight_dc(params({1}), nullptr, nullptr, box, a),
                                 smc_weight_dc(params({2}), nullptr, nullptr, box, clipped)}));
  CHECK(with_clip[1] == 0.0);
  CHECK(with_clip[0] == 1.0);

  SlEstimate rejected;
  rejected.status = SlStatus::RejectedCondition;
  rejected.log_ratio = 0.0;
  CHECK(smc_weight_dc(params({1}), nullptr, nullptr, box, rejected) == -INFINITY);

  bool fallback = false;
  const Eigen::VectorXd uni = normalize_log_weights(vec({-INFINITY, -INFINITY}), &fallback);
  CHECK(fallback);
  CHECK(uni[0] == 0.5);
}

TEST_CASE("forward ABC-SMC recovers a conjugate posterior and keeps its invariants") {
  const auto model = drift_bm();
  Engine rng(7);
  const TimeGrid grid = TimeGrid::regular(0.0, 0.5, 8, 1);
  const Trajectory obs = simulate_coarse(*model, params({1.2}), grid, state1(0.0), Scheme::EulerMaruyama, rng);
  const double horizon = 4.0;
  const double xbar = obs.values(obs.length() - 1, 0) / horizon;
  FixedSummaries summaries(std::make_shared<FunctionSummary>(
      1, [horizon](const Eigen::MatrixXd& x) { return vec({x(x.rows() - 1, 0) / horizon}); }));

  SmcConfig cfg;
  cfg.particles = 300;
  cfg.max_rounds = 8;
  cfg.seed = 11;
  const SmcResult res = run_abc_smc(*model, obs, grid, cfg, summaries);
  REQUIRE(res.rounds.size() >= 4);

  double prev_eps = INFINITY;
  for (std::size_t r = 0; r < res.rounds.size(); ++r) {
    const Population& pop = res.rounds[r];
    CHECK(std::abs(pop.weights.sum() - 1.0) < 1e-10);
    CHECK(pop.threshold <= prev_eps);
    prev_eps = pop.threshold;
    for (Eigen::Index i = 0; i < pop.size(); ++i) {
      CHECK(model->prior().contains(pop.particles.row(i).transpose()));
      CHECK(pop.distances[i] <= pop.threshold);
    }
  }
  CHECK(std::isinf(res.rounds.front().threshold));
  CHECK(res.logs.front().acceptance_rate == 1.0);
  for (std::size_t r = 2; r < res.rounds.size(); ++r) CHECK(res.rounds[r].threshold < res.rounds[r - 1].threshold);

  // Exact posterior: N(xbar, 1 / horizon), far inside the prior box.
  const Population& last = res.rounds.back();
  const WeightedSample ws{last.particles, last.weights};
  const double sd = std::sqrt(1.0 / horizon + last.threshold * last.threshold / 3.0);
  const double se = sd / std::sqrt(effective_sample_size(last.weights));
  CAPTURE(ws.mean()[0]);
  CAPTURE(xbar);
  CHECK(std::abs(ws.mean()[0] - xbar) < 3.0 * se);

  const SmcResult again = run_abc_smc(*model, obs, grid, cfg, summaries);
  REQUIRE(again.rounds.size() == res.rounds.size());
  for (std::size_t r = 0; r < res.rounds.size(); ++r) {
    CHECK(again.rounds[r].particles == res.rounds[r].particles);
    CHECK(again.rounds[r].weights == res.rounds[r].weights);
  }

  SmcConfig threaded = cfg;
  threaded.workers = 3;
  const SmcResult par = run_abc_smc(*model, obs, grid, threaded, summaries);
  REQUIRE(par.rounds.size() == res.rounds.size());
  CHECK(par.rounds.back().particles == res.rounds.back().particles);
}

TEST_CASE("data-conditional round one sits closer to the data than forward round one") {
  const auto ou = make_model("ou");
  Engine rng(5);
  const Trajectory obs = generate_observation_exact(*ou, params({3, 1, 1}), state1(0.01), 0.1, 100, rng);
  const TimeGrid grid(obs.times, {10});
  FixedSummaries summaries(std::make_shared<PluginSummary>("basic", 1));
  SmcConfig cfg;
  cfg.particles = 60;
  cfg.max_rounds = 1;
  cfg.seed = 3;
  const SmcResult fwd = run_abc_smc(*ou, obs, grid, cfg, summaries);
  cfg.mode = SamplerMode::DataConditional;
  const SmcResult dc = run_abc_smc(*ou, obs, grid, cfg, summaries);
  auto median = [](Eigen::VectorXd d) {
    std::sort(d.begin(), d.end());
    return d[d.size() / 2];
  };
  CHECK(median(dc.rounds[0].distances) < median(fwd.rounds[0].distances));
  const RoundLog& log = dc.logs[0];
  const std::size_t accounted = log.sl_rejected + log.accepted + log.simulation_failures;
  CHECK(accounted == log.proposals);
}

TEST_CASE("a spent time limit stops the run before any round completes") {
  const auto model = drift_bm();
  Engine rng(7);
  const TimeGrid grid = TimeGrid::regular(0.0, 0.5, 8, 1);
  const Trajectory obs = simulate_coarse(*model, params({1.2}), grid, state1(0.0), Scheme::EulerMaruyama, rng);
  FixedSummaries summaries(
      std::make_shared<FunctionSummary>(1, [](const Eigen::MatrixXd& x) { return vec({x(x.rows() - 1, 0)}); }));
  SmcConfig cfg;
  cfg.particles = 50;
  cfg.max_rounds = 3;
  const SmcResult stopped = run_abc_smc(*model, obs, grid, cfg, summaries, {}, 0.0);
  CHECK(stopped.status == RunStatus::TimeLimit);
  CHECK(stopped.rounds.empty());
  REQUIRE(stopped.logs.size() == 1);
  CHECK_FALSE(stopped.logs[0].budget_exhausted);

  const SmcResult ample = run_abc_smc(*model, obs, grid, cfg, summaries, {}, 3600.0);
  const SmcResult unlimited = run_abc_smc(*model, obs, grid, cfg, summaries);
  REQUIRE(ample.rounds.size() == unlimited.rounds.size());
  CHECK(ample.rounds.back().particles == unlimited.rounds.back().particles);
}

TEST_CASE("sampler configuration validation") {
  SmcConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg.alpha = 0.5;
  cfg.particles = 1;
  CHECK_THROWS(cfg.validate());
}
