#include <benchmark/benchmark.h>

#include "dcabc/backward.hpp"
#include "dcabc/lookahead.hpp"
#include "dcabc/models.hpp"
#include "dcabc/pen.hpp"
#include "dcabc/simulate.hpp"
#include "dcabc/summary.hpp"
#include "dcabc/synthetic_likelihood.hpp"

namespace {

using namespace dcabc;

struct OuSetup {
  std::shared_ptr<SdeModel> model = make_model("ou");
  ParamVector theta = Eigen::Vector3d(3, 1, 1);
  Trajectory obs;
  TimeGrid grid;

  OuSetup() {
    Engine rng(1);
    State x0(1);
    x0 << 0.01;
    obs = generate_observation_exact(*model, theta, x0, 0.1, 100, rng);
    grid = TimeGrid(obs.times, {10});
  }
};

PenNetwork make_net() {
  PenArchitecture a;
  a.output_dim = 3;
  PenNetwork net(a);
  Engine rng(2);
  net.initialize(rng);
  return net;
}

void BM_SimulateForward(benchmark::State& state) {
  OuSetup s;
  Engine rng(3);
  const State x0 = s.obs.values.row(0).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_coarse(*s.model, s.theta, s.grid, x0, Scheme::EulerMaruyama, rng));
}
BENCHMARK(BM_SimulateForward);

void BM_LookaheadSis(benchmark::State& state) {
  OuSetup s;
  std::uint64_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(run_lookahead_sis(*s.model, s.theta, s.obs, s.grid, static_cast<int>(state.range(0)), {},
                                               Scheme::EulerMaruyama, StreamKey(++i)));
}
BENCHMARK(BM_LookaheadSis)->Arg(30)->Arg(50);

void BM_BackwardSample(benchmark::State& state) {
  OuSetup s;
  const ParticleSystem sys = run_lookahead_sis(*s.model, s.theta, s.obs, s.grid, 30, {}, Scheme::EulerMaruyama, StreamKey(4));
  const BackwardSampler sampler(sys, *s.model);
  Engine rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(rng));
}
BENCHMARK(BM_BackwardSample);

void BM_BackwardSamplerSetup(benchmark::State& state) {
  OuSetup s;
  const ParticleSystem sys = run_lookahead_sis(*s.model, s.theta, s.obs, s.grid, 30, {}, Scheme::EulerMaruyama, StreamKey(4));
  for (auto _ : state) benchmark::DoNotOptimize(BackwardSampler(sys, *s.model));
}
BENCHMARK(BM_BackwardSamplerSetup);

void BM_PenForwardBatch(benchmark::State& state) {
  OuSetup s;
  const PenNetwork net = make_net();
  std::vector<const Eigen::MatrixXd*> xs(static_cast<std::size_t>(state.range(0)), &s.obs.values);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_batch(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PenForwardBatch)->Arg(1)->Arg(30)->Arg(256);

void BM_PenGradient(benchmark::State& state) {
  OuSetup s;
  const PenNetwork net = make_net();
  std::vector<const Eigen::MatrixXd*> xs(256, &s.obs.values);
  const Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(3, 256);
  Eigen::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradient(xs, targets, &grad));
}
BENCHMARK(BM_PenGradient);

void BM_SyntheticLikelihood(benchmark::State& state) {
  OuSetup s;
  const ParticleSystem sys = run_lookahead_sis(*s.model, s.theta, s.obs, s.grid, 30, {}, Scheme::EulerMaruyama, StreamKey(4));
  const BackwardSampler sampler(sys, *s.model);
  const PenSummary summary(std::make_shared<const PenNetwork>(make_net()));
  const Eigen::VectorXd s_eval = summary.summarize(s.obs);
  GuardConfig guards;
  guards.enabled = false;
  Engine rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(sl_log_ratio(sampler, s_eval, summary, 30, guards, rng));
}
BENCHMARK(BM_SyntheticLikelihood);

}  // namespace
BENCHMARK_MAIN();
