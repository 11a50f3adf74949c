#include "dcabc/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dcabc/error.hpp"
#include "dcabc/models.hpp"

namespace dcabc {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void read_value(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  out = j.get<double>();
}

void read_value(const json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(path, "integer out of range");
  out = static_cast<int>(v);
}

void read_value(const json& j, const std::string& path, std::size_t& out) {
  if (!j.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
  out = j.get<std::size_t>();
}

void read_value(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  out = j.get<bool>();
}

void read_value(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  out = j.get<std::string>();
}

void read_value(const json& j, const std::string& path, Eigen::VectorXd& out) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
  out.resize(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) read_value(j[i], path + "[" + std::to_string(i) + "]", out[static_cast<Eigen::Index>(i)]);
}

/// Object reader that records which keys were consumed.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void opt(const std::string& key, T& out) {
    used_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read_value(*it, join(path_, key), out);
  }

  template <class T>
  void req(const std::string& key, T& out) {
    if (!has(key)) throw ConfigError(join(path_, key), "required field missing");
    opt(key, out);
  }

  Obj sub(const std::string& key) {
    used_.insert(key);
    return Obj(j_.at(key), join(path_, key));
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key)) throw ConfigError(join(path_, key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_train(Obj o, TrainConfig& t) {
  o.opt("max_epochs", t.max_epochs);
  o.opt("patience", t.patience);
  o.opt("learning_rate", t.learning_rate);
  o.opt("beta1", t.beta1);
  o.opt("beta2", t.beta2);
  o.opt("epsilon", t.epsilon);
  o.opt("batch_size", t.batch_size);
  o.finish();
}

json write_train(const TrainConfig& t) {
  return {{"max_epochs", t.max_epochs}, {"patience", t.patience},   {"learning_rate", t.learning_rate},
          {"beta1", t.beta1},           {"beta2", t.beta2},         {"epsilon", t.epsilon},
          {"batch_size", t.batch_size}};
}

template <class Fn>
void wrap(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

const char* weighting_name(WeightingSpec::Kind k) {
  switch (k) {
    case WeightingSpec::Kind::EmGaussian: return "em_gaussian";
    case WeightingSpec::Kind::EmGaussianScaled: return "em_gaussian_scaled";
    case WeightingSpec::Kind::EmGaussianHorizon: return "em_gaussian_horizon";
  }
  return "";
}

const char* source_name(ObservationConfig::Source s) {
  switch (s) {
    case ObservationConfig::Source::Euler: return "euler";
    case ObservationConfig::Source::Exact: return "exact";
    case ObservationConfig::Source::Csv: return "csv";
  }
  return "";
}

std::vector<double> to_vec(const Eigen::Ref<const Eigen::VectorXd>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

SamplerMode parse_mode(const std::string& s) {
  if (s == "forward" || s == "f") return SamplerMode::Forward;
  if (s == "dc" || s == "data-conditional") return SamplerMode::DataConditional;
  throw DomainError("unknown sampler mode '" + s + "' (expected forward or dc)");
}

Scheme parse_scheme(const std::string& s) {
  if (s == "em" || s == "euler") return Scheme::EulerMaruyama;
  if (s == "milstein") return Scheme::Milstein;
  throw DomainError("unknown scheme '" + s + "' (expected em or milstein)");
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }

  ExperimentConfig c;
  Obj o(root, "");
  o.req("model", c.model);
  o.req("theta_true", c.theta_true);
  Eigen::VectorXd x0;
  o.req("x0", x0);
  c.x0 = x0;

  if (o.has("prior")) {
    Obj p = o.sub("prior");
    Eigen::VectorXd lo, hi;
    p.req("lower", lo);
    p.req("upper", hi);
    p.finish();
    wrap("prior", [&] { c.prior = PriorBox(lo, hi); });
  }

  {
    Obj ob = o.sub("observation");
    std::string source = "euler";
    ob.opt("source", source);
    if (source == "euler") {
      c.observation.source = ObservationConfig::Source::Euler;
      ob.opt("fine_dt", c.observation.fine_dt);
      ob.opt("thin", c.observation.thin);
      ob.opt("horizon", c.observation.horizon);
    } else if (source == "exact") {
      c.observation.source = ObservationConfig::Source::Exact;
      ob.opt("delta", c.observation.delta);
      ob.opt("count", c.observation.count);
    } else if (source == "csv") {
      c.observation.source = ObservationConfig::Source::Csv;
      std::string path;
      ob.req("path", path);
      c.observation.csv = path;
    } else {
      throw ConfigError("observation.source", "expected euler, exact or csv");
    }
    ob.finish();
  }

  if (o.has("grid")) {
    Obj g = o.sub("grid");
    g.opt("subintervals", c.subintervals);
    g.finish();
  }

  if (o.has("sampler")) {
    Obj s = o.sub("sampler");
    auto& sc = c.sampler;
    std::string mode = "forward", scheme = "em", stride = "observation";
    s.opt("mode", mode);
    wrap("sampler.mode", [&] { sc.mode = parse_mode(mode); });
    s.opt("particles", sc.particles);
    s.opt("rounds", sc.max_rounds);
    s.opt("alpha", sc.alpha);
    s.opt("stop_acceptance", sc.stop_acceptance);
    s.opt("stop_after_round", sc.stop_after_round);
    s.opt("budget_factor", sc.budget_factor);
    s.opt("propose_retries", sc.propose_retries);
    s.opt("lookahead_particles", sc.lookahead_particles);
    s.opt("scheme", scheme);
    wrap("sampler.scheme", [&] { sc.scheme = parse_scheme(scheme); });
    s.opt("backward_stride", stride);
    if (stride == "observation") sc.backward.stride = BackwardConfig::Stride::Observation;
    else if (stride == "fine") sc.backward.stride = BackwardConfig::Stride::Fine;
    else throw ConfigError("sampler.backward_stride", "expected observation or fine");
    s.opt("workers", sc.workers);
    s.opt("record_sl_diagnostics", sc.record_sl_diagnostics);
    s.finish();
  }

  if (o.has("weighting")) {
    Obj w = o.sub("weighting");
    std::string kind = "em_gaussian";
    w.opt("kind", kind);
    if (kind == "em_gaussian") c.sampler.weighting.kind = WeightingSpec::Kind::EmGaussian;
    else if (kind == "em_gaussian_scaled") c.sampler.weighting.kind = WeightingSpec::Kind::EmGaussianScaled;
    else if (kind == "em_gaussian_horizon") c.sampler.weighting.kind = WeightingSpec::Kind::EmGaussianHorizon;
    else throw ConfigError("weighting.kind", "expected em_gaussian, em_gaussian_scaled or em_gaussian_horizon");
    w.opt("cov_scale", c.sampler.weighting.cov_scale);
    w.opt("horizon_steps", c.sampler.weighting.horizon_steps);
    w.finish();
  }

  if (o.has("guards")) {
    Obj g = o.sub("guards");
    g.opt("max_condition_number", c.sampler.guards.max_condition_number);
    g.opt("clip_positive_log_ratio", c.sampler.guards.clip_positive_log_ratio);
    g.opt("enabled", c.sampler.guards.enabled);
    g.finish();
  }

  if (o.has("summary")) {
    Obj s = o.sub("summary");
    auto& sc = c.summary;
    std::string kind = "pen";
    s.opt("kind", kind);
    if (kind == "pen") sc.kind = SummaryConfig::Kind::Pen;
    else if (kind == "plugin") sc.kind = SummaryConfig::Kind::Plugin;
    else throw ConfigError("summary.kind", "expected pen or plugin");
    s.opt("pretrain_samples", sc.pretrain_samples);
    s.opt("markov_order", sc.architecture.markov_order);
    s.opt("inner_hidden", sc.architecture.inner_hidden);
    s.opt("representation", sc.architecture.representation);
    s.opt("outer_hidden", sc.architecture.outer_hidden);
    if (s.has("pretrain")) read_train(s.sub("pretrain"), sc.pretrain);
    if (s.has("retrain")) read_train(s.sub("retrain"), sc.retrain);
    s.opt("stability_rule", sc.stability_rule);
    s.opt("retrain_enabled", sc.retrain_enabled);
    s.opt("val_fraction", sc.val_fraction);
    s.finish();
  }

  std::string reference;
  if (o.has("reference")) {
    o.opt("reference", reference);
    c.reference = reference;
  }
  o.opt("seed", c.sampler.seed);
  std::string out;
  if (o.has("output_dir")) {
    o.opt("output_dir", out);
    c.output_dir = out;
  }
  o.finish();

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  std::shared_ptr<SdeModel> m;
  wrap("model", [&] { m = make_model(model); });
  if (theta_true.size() != m->param_dim())
    throw ConfigError("theta_true", "expected " + std::to_string(m->param_dim()) + " values for model " + model);
  if (x0.size() != m->state_dim())
    throw ConfigError("x0", "expected " + std::to_string(m->state_dim()) + " values for model " + model);
  if (!x0.allFinite()) throw ConfigError("x0", "must be finite");
  if (prior && prior->dim() != m->param_dim())
    throw ConfigError("prior", "dimension does not match the model's parameter count");

  const auto& ob = observation;
  switch (ob.source) {
    case ObservationConfig::Source::Euler:
      if (!(ob.fine_dt > 0)) throw ConfigError("observation.fine_dt", "must be positive");
      if (ob.thin < 1) throw ConfigError("observation.thin", "must be at least 1");
      if (!(ob.horizon > 0)) throw ConfigError("observation.horizon", "must be positive");
      break;
    case ObservationConfig::Source::Exact:
      if (!m->has_exact_transition()) throw ConfigError("observation.source", model + " has no exact transition");
      if (!(ob.delta > 0)) throw ConfigError("observation.delta", "must be positive");
      if (ob.count < 1) throw ConfigError("observation.count", "must be at least 1");
      break;
    case ObservationConfig::Source::Csv: break;
  }
  if (subintervals < 1) throw ConfigError("grid.subintervals", "must be at least 1");
  wrap("sampler", [&] { sampler.validate(); });
  wrap("weighting", [&] { sampler.weighting.validate(); });
  wrap("guards", [&] { sampler.guards.validate(); });
  if (summary.kind == SummaryConfig::Kind::Pen) {
    if (summary.pretrain_samples < 10) throw ConfigError("summary.pretrain_samples", "must be at least 10");
    wrap("summary.pretrain", [&] { summary.pretrain.validate(); });
    wrap("summary.retrain", [&] { summary.retrain.validate(); });
    PenArchitecture a = summary.architecture;
    a.state_dim = m->state_dim();
    a.output_dim = m->param_dim();
    wrap("summary", [&] { a.validate(); });
    if (!(summary.val_fraction >= 0 && summary.val_fraction < 1))
      throw ConfigError("summary.val_fraction", "must lie in [0, 1)");
  }
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model;
  j["theta_true"] = to_vec(c.theta_true);
  j["x0"] = to_vec(c.x0);
  if (c.prior) j["prior"] = {{"lower", to_vec(c.prior->lower())}, {"upper", to_vec(c.prior->upper())}};
  json ob = {{"source", source_name(c.observation.source)}};
  switch (c.observation.source) {
    case ObservationConfig::Source::Euler:
      ob["fine_dt"] = c.observation.fine_dt;
      ob["thin"] = c.observation.thin;
      ob["horizon"] = c.observation.horizon;
      break;
    case ObservationConfig::Source::Exact:
      ob["delta"] = c.observation.delta;
      ob["count"] = c.observation.count;
      break;
    case ObservationConfig::Source::Csv: ob["path"] = c.observation.csv.string(); break;
  }
  j["observation"] = ob;
  j["grid"] = {{"subintervals", c.subintervals}};
  const auto& s = c.sampler;
  j["sampler"] = {{"mode", to_string(s.mode)},
                  {"particles", s.particles},
                  {"rounds", s.max_rounds},
                  {"alpha", s.alpha},
                  {"stop_acceptance", s.stop_acceptance},
                  {"stop_after_round", s.stop_after_round},
                  {"budget_factor", s.budget_factor},
                  {"propose_retries", s.propose_retries},
                  {"lookahead_particles", s.lookahead_particles},
                  {"scheme", s.scheme == Scheme::Milstein ? "milstein" : "em"},
                  {"backward_stride", s.backward.stride == BackwardConfig::Stride::Fine ? "fine" : "observation"},
                  {"record_sl_diagnostics", s.record_sl_diagnostics}};
  j["weighting"] = {{"kind", weighting_name(s.weighting.kind)},
                    {"cov_scale", s.weighting.cov_scale},
                    {"horizon_steps", s.weighting.horizon_steps}};
  j["guards"] = {{"max_condition_number", s.guards.max_condition_number},
                 {"clip_positive_log_ratio", s.guards.clip_positive_log_ratio},
                 {"enabled", s.guards.enabled}};
  const auto& sm = c.summary;
  json js = {{"kind", sm.kind == SummaryConfig::Kind::Pen ? "pen" : "plugin"}};
  if (sm.kind == SummaryConfig::Kind::Pen) {
    js["pretrain_samples"] = sm.pretrain_samples;
    js["markov_order"] = sm.architecture.markov_order;
    js["inner_hidden"] = sm.architecture.inner_hidden;
    js["representation"] = sm.architecture.representation;
    js["outer_hidden"] = sm.architecture.outer_hidden;
    js["pretrain"] = write_train(sm.pretrain);
    js["retrain"] = write_train(sm.retrain);
    js["stability_rule"] = sm.stability_rule;
    js["retrain_enabled"] = sm.retrain_enabled;
    js["val_fraction"] = sm.val_fraction;
  }
  j["summary"] = js;
  j["seed"] = s.seed;
  // workers, output_dir and the reference path do not change the sampled output.
  return j.dump();
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dcabc
