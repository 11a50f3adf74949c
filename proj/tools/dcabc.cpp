#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dcabc/backward.hpp"
#include "dcabc/csv.hpp"
#include "dcabc/error.hpp"
#include "dcabc/experiment.hpp"
#include "dcabc/lookahead.hpp"
#include "dcabc/mcmc.hpp"
#include "dcabc/simulate.hpp"
#include "dcabc/trajectory_io.hpp"
#include "dcabc/version.hpp"

namespace fs = std::filesystem;
using namespace dcabc;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", c.out, "Output directory (default: <output_dir>/<config hash>)");
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--workers", c.workers, "Cap on worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.sampler.seed = *c.seed;
  if (c.workers) cfg.sampler.workers = *c.workers;
  return cfg;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg, const std::string& suffix) {
  fs::path dir = c.out.empty() ? cfg.output_dir / (config_hash(cfg) + "-" + suffix) : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

int cmd_simulate(const Common& c, bool conditional, int particles) {
  const ExperimentConfig cfg = load(c);
  const fs::path dir = out_dir(c, cfg, "simulate");
  write_manifest(dir, cfg, conditional ? "simulate --conditional" : "simulate");
  auto model = build_model(cfg);
  const Trajectory obs = build_observation(cfg, *model);
  const TimeGrid grid = build_grid(cfg, obs);
  const State x0 = obs.values.row(0).transpose();
  write_trajectory_csv(dir / "observation.csv", obs);

  Engine rng = aux_key(cfg.sampler.seed, AuxStream::Conditional).child(0).engine();
  const Trajectory fine = simulate_forward(*model, cfg.theta_true, grid, x0, cfg.sampler.scheme, rng);
  write_trajectory_csv(dir / "forward_fine.csv", fine);
  write_trajectory_csv(dir / "forward_coarse.csv", fine.downsample(grid));
  std::cout << "wrote " << (dir / "forward_fine.csv").string() << " and forward_coarse.csv\n";
  if (!conditional) return kExitSuccess;

  const int P = particles > 0 ? particles : cfg.sampler.lookahead_particles;
  const ParticleSystem system =
      run_lookahead_sis(*model, cfg.theta_true, obs, grid, P, cfg.sampler.weighting, cfg.sampler.scheme,
                        aux_key(cfg.sampler.seed, AuxStream::Conditional).child(1));
  std::vector<Trajectory> paths;
  for (int j = 0; j < P; ++j) paths.push_back(system.particle_fine(j));
  write_trajectory_cache(dir / "particles.bin", paths);

  // Normalized lookahead weights, one row per fine time.
  std::ofstream w(dir / "particle_weights.csv");
  w << "time";
  for (int j = 0; j < P; ++j) w << ",w" << (j + 1);
  w << '\n';
  for (std::size_t k = 0; k <= system.fine_count(); ++k) {
    w << csv::format_double(grid.fine_time(k));
    for (int j = 0; j < P; ++j)
      w << ',' << csv::format_double(system.norm_weights()(j, static_cast<Eigen::Index>(k)));
    w << '\n';
  }

  const BackwardSampler sampler(system, *model, cfg.sampler.backward);
  Engine bwd = aux_key(cfg.sampler.seed, AuxStream::Conditional).child(2).engine();
  write_trajectory_csv(dir / "backward.csv", sampler.sample(bwd));
  std::cout << "wrote particles.bin, particle_weights.csv and backward.csv (P=" << P << ")\n";
  return kExitSuccess;
}

int cmd_pretrain(const Common& c, std::optional<std::size_t> samples) {
  ExperimentConfig cfg = load(c);
  if (samples) cfg.summary.pretrain_samples = *samples;
  cfg.summary.kind = SummaryConfig::Kind::Pen;
  cfg.validate();
  const fs::path dir = out_dir(c, cfg, "pretrain");
  write_manifest(dir, cfg, "pretrain-summaries");
  auto model = build_model(cfg);
  const Trajectory obs = build_observation(cfg, *model);
  const TimeGrid grid = build_grid(cfg, obs);
  const PretrainResult res = build_pretrained(cfg, *model, grid, obs.values.row(0).transpose());
  res.network.save(dir / "summary_pretrained.pen");
  save_training_set(dir / "dataset.bin", res.data);
  write_training_trace(dir / "training_pretrain.csv", res.report);
  std::cout << "pretrained on " << res.data.size() << " samples; best epoch " << res.report.best_epoch
            << ", validation mse " << res.report.best_val_mse << "\nwrote " << dir.string() << '\n';
  return kExitSuccess;
}

int cmd_infer(const Common& c, const std::string& mode, const std::string& pretrained_dir,
              const std::string& reference, std::optional<double> time_limit) {
  ExperimentConfig cfg = load(c);
  if (!mode.empty()) {
    try {
      cfg.sampler.mode = parse_mode(mode);
    } catch (const DomainError& e) {
      throw ConfigError("--mode", e.what());
    }
  }
  if (!reference.empty()) cfg.reference = reference;
  cfg.validate();
  RunOptions opts;
  if (!c.out.empty()) opts.output_dir = c.out;
  opts.progress = &std::cerr;
  opts.time_limit_seconds = time_limit;
  if (!pretrained_dir.empty()) {
    PretrainResult pre{PenNetwork::load(fs::path(pretrained_dir) / "summary_pretrained.pen"),
                       load_training_set(fs::path(pretrained_dir) / "dataset.bin"), {}};
    opts.pretrained = std::make_shared<const PretrainResult>(std::move(pre));
  }
  const ExperimentOutcome out = run_experiment(cfg, opts);
  std::cout << "status " << to_string(out.result.status) << "; " << out.result.rounds.size() << " rounds in "
            << out.directory.string() << '\n';
  return out.exit_code;
}

// Adds a wasserstein column to metrics.csv of a finished run.
int evaluate_run(const fs::path& run, const fs::path& reference_path) {
  const WeightedSample ref = read_weighted_sample(reference_path);
  const csv::Table metrics = csv::read(run / "metrics.csv");
  std::vector<std::string> header = metrics.header;
  const bool has_col = std::find(header.begin(), header.end(), "wasserstein") != header.end();
  if (!has_col) header.push_back("wasserstein");
  const int round_col = metrics.column("round");
  if (round_col < 0) throw Error("metrics.csv has no round column");

  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (std::size_t r = 0; r < metrics.rows.size(); ++r) {
    const auto round = static_cast<int>(metrics.rows[r][static_cast<std::size_t>(round_col)]);
    const WeightedSample pop = read_weighted_sample(run / ("particles_round_" + std::to_string(round) + ".csv"));
    const double w = wasserstein(pop, ref);
    std::vector<double> row = metrics.rows[r];
    if (has_col) row[static_cast<std::size_t>(metrics.column("wasserstein"))] = w;
    else row.push_back(w);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv::format_double(row[i]);
    out << '\n';
    std::cout << "round " << round << " wasserstein " << csv::format_double(w) << '\n';
  }
  std::ofstream(run / "metrics.csv") << out.str();
  return kExitSuccess;
}

int cmd_evaluate(const std::vector<std::string>& samples, const std::string& run, const std::string& reference) {
  if (!run.empty()) {
    if (reference.empty()) throw ConfigError("--reference", "required with --run");
    return evaluate_run(run, reference);
  }
  if (samples.size() != 2) throw ConfigError("samples", "expected two particle CSV files");
  const WeightedSample a = read_weighted_sample(samples[0]);
  const WeightedSample b = read_weighted_sample(samples[1]);
  if (a.points.cols() != b.points.cols()) throw ConfigError("samples", "parameter counts differ");
  std::cout << csv::format_double(wasserstein(a, b)) << '\n';
  return kExitSuccess;
}

int cmd_reference(const Common& c, std::size_t iterations) {
  const ExperimentConfig cfg = load(c);
  const fs::path dir = out_dir(c, cfg, "mcmc");
  write_manifest(dir, cfg, "reference-mcmc");
  auto model = build_model(cfg);
  if (!model->has_exact_transition())
    throw ConfigError("model", cfg.model + " has no exact transition density; use a long forward run instead");
  const Trajectory obs = build_observation(cfg, *model);
  write_trajectory_csv(dir / "observation.csv", obs);
  McmcConfig mc;
  mc.iterations = iterations;
  Engine rng = aux_key(cfg.sampler.seed, AuxStream::Mcmc).engine();
  const McmcResult res = mcmc_exact(*model, obs, mc, rng);
  write_weighted_sample(dir / "reference.csv", res.sample, model->param_names());
  {
    std::ofstream t(dir / "acceptance_trace.csv");
    t << "window,acceptance_rate\n";
    for (std::size_t i = 0; i < res.acceptance_trace.size(); ++i)
      t << i << ',' << csv::format_double(res.acceptance_trace[i]) << '\n';
  }
  nlohmann::json s;
  s["acceptance_rate"] = res.acceptance_rate;
  s["all_rejected"] = res.all_rejected;
  s["iterations"] = iterations;
  s["samples"] = res.sample.points.rows();
  for (int k = 0; k < model->param_dim(); ++k) {
    s["mean"][model->param_names()[k]] = res.mean[k];
    s["standard_error"][model->param_names()[k]] = res.standard_error[k];
  }
  std::ofstream(dir / "mcmc_summary.json") << s.dump(2) << '\n';
  std::cout << "acceptance " << res.acceptance_rate << "; wrote " << (dir / "reference.csv").string() << '\n';
  if (res.all_rejected) std::cerr << "warning: every proposal was rejected\n";
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-conditional ABC-SMC for stochastic differential equations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common sim_c, pre_c, inf_c, ref_c;
  bool conditional = false;
  int particles = 0;
  auto* sim = app.add_subcommand("simulate", "Simulate observation and forward trajectories at theta_true");
  add_common(sim, sim_c);
  sim->add_flag("--conditional", conditional, "Also run lookahead SIS and draw one backward trajectory");
  sim->add_option("--particles", particles, "Lookahead particles (default: sampler.lookahead_particles)");

  std::optional<std::size_t> samples;
  auto* pre = app.add_subcommand("pretrain-summaries", "Train the summary network on prior-predictive data");
  add_common(pre, pre_c);
  pre->add_option("--samples", samples, "Prior-predictive sample count R");

  std::string mode, pretrained, inf_reference;
  auto* inf = app.add_subcommand("infer", "Run ABC-SMC");
  add_common(inf, inf_c);
  inf->add_option("--mode", mode, "forward or dc");
  inf->add_option("--pretrained", pretrained, "Directory written by pretrain-summaries")->check(CLI::ExistingDirectory);
  inf->add_option("--reference", inf_reference, "Reference particle CSV for the metrics Wasserstein column")
      ->check(CLI::ExistingFile);
  std::optional<double> time_limit;
  inf->add_option("--time-limit", time_limit, "Stop the sampler after this many seconds (exit code 2)")
      ->check(CLI::NonNegativeNumber);

  std::vector<std::string> eval_samples;
  std::string eval_run, eval_reference;
  auto* ev = app.add_subcommand("evaluate", "Wasserstein distance between particle CSVs, or for every round of a run");
  ev->add_option("samples", eval_samples, "Two particle CSV files")->check(CLI::ExistingFile);
  ev->add_option("--run", eval_run, "Run directory; adds a wasserstein column to its metrics.csv")
      ->check(CLI::ExistingDirectory);
  ev->add_option("--reference", eval_reference, "Reference particle CSV")->check(CLI::ExistingFile);

  std::size_t iterations = 100000;
  auto* ref = app.add_subcommand("reference-mcmc", "Exact-likelihood random-walk Metropolis reference posterior");
  add_common(ref, ref_c);
  ref->add_option("--iterations", iterations, "Chain length including burn-in");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitValidation;
  }

  try {
    if (*sim) return cmd_simulate(sim_c, conditional, particles);
    if (*pre) return cmd_pretrain(pre_c, samples);
    if (*inf) return cmd_infer(inf_c, mode, pretrained, inf_reference, time_limit);
    if (*ev) return cmd_evaluate(eval_samples, eval_run, eval_reference);
    if (*ref) return cmd_reference(ref_c, iterations);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
