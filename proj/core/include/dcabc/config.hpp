#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dcabc/abc_smc.hpp"
#include "dcabc/pen.hpp"

namespace dcabc {

struct ObservationConfig {
  enum class Source { Euler, Exact, Csv };
  Source source = Source::Euler;
  double fine_dt = 1e-3;  // Euler
  int thin = 100;         // Euler
  double horizon = 10.0;  // Euler
  double delta = 0.1;     // Exact
  std::size_t count = 100;  // Exact: number of intervals
  std::filesystem::path csv;  // Csv
};

struct SummaryConfig {
  enum class Kind { Pen, Plugin };
  Kind kind = Kind::Pen;
  std::size_t pretrain_samples = 2000;
  PenArchitecture architecture;  // state_dim and output_dim are filled from the model
  TrainConfig pretrain;
  TrainConfig retrain;
  bool stability_rule = true;
  bool retrain_enabled = true;
  double val_fraction = 0.2;
};

struct ExperimentConfig {
  std::string model;
  ParamVector theta_true;
  std::optional<PriorBox> prior;
  State x0;
  ObservationConfig observation;
  int subintervals = 10;  // A
  SmcConfig sampler;
  SummaryConfig summary;
  std::optional<std::filesystem::path> reference;
  std::filesystem::path output_dir = "runs/out";

  /// Cross-field checks against the model registry; throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown keys and type mismatches raise ConfigError naming
/// the dotted field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the effective configuration (all defaults filled in).
std::string canonical_json(const ExperimentConfig& config);
/// FNV-1a 64 of canonical_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

SamplerMode parse_mode(const std::string& s);
Scheme parse_scheme(const std::string& s);

}  // namespace dcabc
