#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "dcabc/abc_smc.hpp"
#include "dcabc/config.hpp"
#include "dcabc/evaluation.hpp"

namespace dcabc {

enum ExitCode : int { kExitSuccess = 0, kExitPartial = 2, kExitValidation = 3, kExitRuntime = 4 };

/// Streams outside the sampler's own, all children of StreamKey(seed).child(0).
/// The sampler uses children t >= 1 for round t.
enum class AuxStream : std::uint64_t { Observation = 0, Pretrain = 1, Retrain = 2, Conditional = 3, Mcmc = 4 };
StreamKey aux_key(std::uint64_t seed, AuxStream stream);

std::shared_ptr<SdeModel> build_model(const ExperimentConfig& config);
Trajectory build_observation(const ExperimentConfig& config, const SdeModel& model);
/// Observation times of `obs`, each interval split into config.subintervals steps.
TimeGrid build_grid(const ExperimentConfig& config, const Trajectory& obs);
PenArchitecture build_architecture(const ExperimentConfig& config, const SdeModel& model);
PretrainResult build_pretrained(const ExperimentConfig& config, const SdeModel& model, const TimeGrid& grid,
                                const State& x0);
/// Plugin summaries, or learned PEN summaries starting from `pretrained`.
std::unique_ptr<SummarySchedule> build_summaries(const ExperimentConfig& config, const PretrainResult* pretrained);

struct RunOptions {
  /// Overrides config.output_dir / <config hash>.
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> workers;
  /// Reuse pretrained summaries (shared between forward and DC runs).
  std::shared_ptr<const PretrainResult> pretrained;
  /// Observation to use instead of the configured source.
  std::optional<Trajectory> observation;
  std::ostream* progress = nullptr;
  /// Wall-clock cap on the sampler, excluding pretraining.
  std::optional<double> time_limit_seconds;
};

struct ExperimentOutcome {
  int exit_code = kExitSuccess;
  std::filesystem::path directory;
  SmcResult result;
  std::vector<double> wasserstein;  // per round, when a reference is configured
};

std::filesystem::path default_output_dir(const ExperimentConfig& config);

/// Runs inference and writes observation.csv, particles_round_<t>.csv,
/// metrics.csv, run_log.json, manifest.json, summary network snapshots and
/// training traces into the output directory.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// manifest.json: config hash, seed, versions and the canonical config.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config, const std::string& command);

void write_population(const std::filesystem::path& path, const Population& pop,
                      const std::vector<std::string>& names);
WeightedSample to_weighted_sample(const Population& pop);

}  // namespace dcabc
