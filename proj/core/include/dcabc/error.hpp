#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcabc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drift or diffusion evaluated to a non-finite value.
class SimulationFailure : public Error {
 public:
  SimulationFailure(const std::string& what, std::vector<double> state)
      : Error(what), state_(std::move(state)) {}
  const std::vector<double>& state() const noexcept { return state_; }

 private:
  std::vector<double> state_;
};

class DegenerateCovariance : public Error {
 public:
  using Error::Error;
};

/// Every lookahead weight at some fine time index is zero.
class DegenerateSystem : public Error {
 public:
  DegenerateSystem(const std::string& what, std::size_t time_index)
      : Error(what), time_index_(time_index) {}
  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

/// Every backward smoothing term vanished.
class DegenerateBackward : public Error {
 public:
  DegenerateBackward(const std::string& what, std::size_t time_index)
      : Error(what), time_index_(time_index) {}
  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `field()` is a dotted path into the config.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace dcabc
