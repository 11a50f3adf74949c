#include "dcabc/experiment.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "dcabc/csv.hpp"
#include "dcabc/error.hpp"
#include "dcabc/plugin_summary.hpp"
#include "dcabc/simulate.hpp"
#include "dcabc/trajectory_io.hpp"
#include "dcabc/version.hpp"

namespace dcabc {

using nlohmann::json;

StreamKey aux_key(std::uint64_t seed, AuxStream stream) {
  return StreamKey(seed).child(0).child(static_cast<std::uint64_t>(stream));
}

std::shared_ptr<SdeModel> build_model(const ExperimentConfig& config) {
  auto model = make_model(config.model);
  if (config.prior) model->set_prior(*config.prior);
  return model;
}

Trajectory build_observation(const ExperimentConfig& config, const SdeModel& model) {
  const auto& ob = config.observation;
  Engine rng = aux_key(config.sampler.seed, AuxStream::Observation).engine();
  switch (ob.source) {
    case ObservationConfig::Source::Euler:
      return generate_observation(model, config.theta_true, config.x0, ob.fine_dt, ob.thin, ob.horizon, rng);
    case ObservationConfig::Source::Exact:
      return generate_observation_exact(model, config.theta_true, config.x0, ob.delta, ob.count, rng);
    case ObservationConfig::Source::Csv: {
      Trajectory obs = read_trajectory_csv(ob.csv);
      if (obs.dim() != model.state_dim()) throw ConfigError("observation.path", "state dimension does not match model");
      return obs;
    }
  }
  throw DomainError("unknown observation source");
}

TimeGrid build_grid(const ExperimentConfig& config, const Trajectory& obs) {
  return TimeGrid(obs.times, {config.subintervals});
}

PenArchitecture build_architecture(const ExperimentConfig& config, const SdeModel& model) {
  PenArchitecture a = config.summary.architecture;
  a.state_dim = model.state_dim();
  a.output_dim = model.param_dim();
  return a;
}

PretrainResult build_pretrained(const ExperimentConfig& config, const SdeModel& model, const TimeGrid& grid,
                                const State& x0) {
  return pretrain_pen(model, grid, x0, config.summary.pretrain_samples, build_architecture(config, model),
                      config.summary.pretrain, config.sampler.scheme,
                      aux_key(config.sampler.seed, AuxStream::Pretrain));
}

std::unique_ptr<SummarySchedule> build_summaries(const ExperimentConfig& config, const PretrainResult* pretrained) {
  if (config.summary.kind == SummaryConfig::Kind::Plugin) {
    const auto d = static_cast<int>(config.x0.size());
    return std::make_unique<FixedSummaries>(std::make_shared<PluginSummary>("basic", d));
  }
  if (!pretrained) throw DomainError("learned summaries need a pretrained network");
  if (!config.summary.retrain_enabled)
    return std::make_unique<FixedSummaries>(
        std::make_shared<PenSummary>(std::make_shared<const PenNetwork>(pretrained->network)));
  LearnedSummaryConfig lc;
  lc.retrain = config.summary.retrain;
  lc.stability_rule = config.summary.stability_rule;
  lc.val_fraction = config.summary.val_fraction;
  return std::make_unique<LearnedPenSummaries>(pretrained->network, pretrained->data, lc,
                                               aux_key(config.sampler.seed, AuxStream::Retrain));
}

std::filesystem::path default_output_dir(const ExperimentConfig& config) {
  return config.output_dir / config_hash(config);
}

WeightedSample to_weighted_sample(const Population& pop) { return {pop.particles, pop.weights}; }

void write_population(const std::filesystem::path& path, const Population& pop,
                      const std::vector<std::string>& names) {
  write_weighted_sample(path, to_weighted_sample(pop), names, &pop.distances);
}

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config, const std::string& command) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(config);
  m["seed"] = config.sampler.seed;
  m["versions"] = {{"dcabc", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__}};
  m["config"] = json::parse(canonical_json(config));
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json round_json(const RoundLog& log) {
  return {{"round", log.round},
          {"epsilon", number_or_null(log.epsilon)},
          {"proposals", log.proposals},
          {"accepted", log.accepted},
          {"acceptance_rate", log.acceptance_rate},
          {"proposal_failures", log.proposal_failures},
          {"simulation_failures", log.simulation_failures},
          {"sl_rejected", log.sl_rejected},
          {"sl_clipped", log.sl_clipped},
          {"ess", log.ess},
          {"seconds", log.seconds},
          {"cumulative_seconds", log.cumulative_seconds},
          {"train_seconds", log.train_seconds},
          {"retrained", log.retrained},
          {"summaries_frozen", log.summaries_frozen},
          {"budget_exhausted", log.budget_exhausted}};
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutcome outcome;
  outcome.directory = options.output_dir ? *options.output_dir : default_output_dir(config);
  std::filesystem::create_directories(outcome.directory);
  const auto& dir = outcome.directory;
  write_manifest(dir, config, "infer");

  auto model = build_model(config);
  const Trajectory obs = options.observation ? *options.observation : build_observation(config, *model);
  write_trajectory_csv(dir / "observation.csv", obs);
  const TimeGrid grid = build_grid(config, obs);
  const State x0 = obs.values.row(0).transpose();

  std::optional<WeightedSample> reference;
  if (config.reference) {
    std::vector<std::string> ref_names;
    reference = read_weighted_sample(*config.reference, &ref_names);
    if (reference->points.cols() != model->param_dim())
      throw ConfigError("reference", "parameter count does not match the model");
  }

  std::shared_ptr<const PretrainResult> pretrained = options.pretrained;
  if (config.summary.kind == SummaryConfig::Kind::Pen && !pretrained) {
    if (options.progress) *options.progress << "pretraining summaries on " << config.summary.pretrain_samples
                                            << " prior-predictive samples\n";
    pretrained = std::make_shared<const PretrainResult>(build_pretrained(config, *model, grid, x0));
  }
  if (pretrained) {
    pretrained->network.save(dir / "summary_pretrained.pen");
    write_training_trace(dir / "training_pretrain.csv", pretrained->report);
  }
  auto summaries = build_summaries(config, pretrained.get());
  auto* learned = dynamic_cast<LearnedPenSummaries*>(summaries.get());

  SmcConfig sc = config.sampler;
  if (options.workers) sc.workers = *options.workers;

  std::ofstream metrics(dir / "metrics.csv");
  if (!metrics) throw Error("cannot write metrics in " + dir.string());
  metrics << "round,epsilon,acceptance_rate,cumulative_seconds" << (reference ? ",wasserstein" : "") << '\n';

  const auto& names = model->param_names();
  auto on_round = [&](const Population& pop, const RoundLog& log) {
    write_population(dir / ("particles_round_" + std::to_string(pop.round) + ".csv"), pop, names);
    if (learned && log.retrained) {
      learned->network()->save(dir / ("summary_round_" + std::to_string(pop.round) + ".pen"));
      write_training_trace(dir / ("training_round_" + std::to_string(pop.round) + ".csv"), log.train_report);
    }
    metrics << log.round << ',' << csv::format_double(log.epsilon) << ',' << csv::format_double(log.acceptance_rate)
            << ',' << csv::format_double(log.cumulative_seconds);
    if (reference) {
      const double w = wasserstein(to_weighted_sample(pop), *reference);
      outcome.wasserstein.push_back(w);
      metrics << ',' << csv::format_double(w);
    }
    metrics << '\n' << std::flush;
    if (options.progress)
      *options.progress << "round " << log.round << ": eps=" << log.epsilon << " accepted " << log.accepted << "/"
                        << log.proposals << " (" << log.acceptance_rate << ") " << log.seconds << "s\n";
  };

  outcome.result = run_abc_smc(*model, obs, grid, sc, *summaries, on_round, options.time_limit_seconds);

  json rl;
  rl["mode"] = to_string(sc.mode);
  rl["status"] = to_string(outcome.result.status);
  rl["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t proposals = 0;
  json rounds = json::array();
  for (const auto& log : outcome.result.logs) {
    proposals += log.proposals;
    rounds.push_back(round_json(log));
  }
  rl["proposals"] = proposals;
  rl["rounds"] = rounds;
  if (!outcome.result.logs.empty()) {
    rl["final_epsilon"] = number_or_null(outcome.result.logs.back().epsilon);
    rl["final_acceptance_rate"] = outcome.result.logs.back().acceptance_rate;
  }
  std::ofstream(dir / "run_log.json") << rl.dump(2) << '\n';

  const bool partial =
      outcome.result.status == RunStatus::BudgetExhausted || outcome.result.status == RunStatus::TimeLimit;
  outcome.exit_code = partial ? kExitPartial : kExitSuccess;
  return outcome;
}

}  // namespace dcabc
