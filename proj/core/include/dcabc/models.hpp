#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcabc/prior.hpp"
#include "dcabc/random.hpp"
#include "dcabc/types.hpp"

namespace dcabc {

/// Time-homogeneous Ito diffusion dX = mu(X, theta) dt + sigma(X, theta) dB.
class SdeModel {
 public:
  virtual ~SdeModel() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int noise_dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  int param_dim() const { return static_cast<int>(param_names().size()); }

  virtual State drift(const State& x, const ParamVector& theta) const = 0;
  virtual DiffusionMatrix diffusion(const State& x, const ParamVector& theta) const = 0;

  /// d = 1 only: derivative of each diffusion column with respect to x.
  /// Returns false when no analytic form exists.
  virtual bool diffusion_derivative(const State& x, const ParamVector& theta, Noise& out) const;

  /// d = m = 1 models can skip the small-matrix path while stepping.
  virtual bool has_scalar_coefficients() const { return false; }
  virtual void scalar_coefficients(double x, const ParamVector& theta, double& mu, double& sigma) const;

  virtual bool has_exact_transition() const { return false; }
  virtual double exact_transition_logpdf(const State& to, const State& from, const ParamVector& theta,
                                         double elapsed) const;
  virtual State sample_exact_transition(const State& from, const ParamVector& theta, double elapsed,
                                        Engine& rng) const;

  /// Coordinates are clamped to this value after every numerical step.
  const std::optional<double>& state_floor() const noexcept { return floor_; }
  const PriorBox& prior() const noexcept { return prior_; }
  void set_prior(PriorBox prior);

 protected:
  SdeModel(PriorBox prior, std::optional<double> floor) : prior_(std::move(prior)), floor_(floor) {}

 private:
  PriorBox prior_;
  std::optional<double> floor_;
};

using ModelPtr = std::shared_ptr<const SdeModel>;

/// dX = beta (alpha - X) dt + sigma X^gamma dB. OU (gamma = 0) and CIR
/// (gamma = 1/2) fix gamma and carry an exact transition density.
class CklsModel final : public SdeModel {
 public:
  enum class Variant { Ou, Cir, Ckls };
  explicit CklsModel(Variant variant);

  std::string id() const override;
  int state_dim() const override { return 1; }
  int noise_dim() const override { return 1; }
  std::vector<std::string> param_names() const override;
  State drift(const State& x, const ParamVector& theta) const override;
  DiffusionMatrix diffusion(const State& x, const ParamVector& theta) const override;
  bool diffusion_derivative(const State& x, const ParamVector& theta, Noise& out) const override;
  bool has_scalar_coefficients() const override { return true; }
  void scalar_coefficients(double x, const ParamVector& theta, double& mu, double& sigma) const override;
  bool has_exact_transition() const override { return variant_ != Variant::Ckls; }
  double exact_transition_logpdf(const State& to, const State& from, const ParamVector& theta,
                                 double elapsed) const override;
  State sample_exact_transition(const State& from, const ParamVector& theta, double elapsed,
                                Engine& rng) const override;

  double gamma(const ParamVector& theta) const;

 private:
  Variant variant_;
};

/// dX = (beta alpha - beta X + sqrt X) dt + sigma sqrt X dB.
class NonlinearDriftModel final : public SdeModel {
 public:
  NonlinearDriftModel();
  std::string id() const override { return "nonlinear"; }
  int state_dim() const override { return 1; }
  int noise_dim() const override { return 1; }
  std::vector<std::string> param_names() const override { return {"alpha", "beta", "sigma"}; }
  State drift(const State& x, const ParamVector& theta) const override;
  DiffusionMatrix diffusion(const State& x, const ParamVector& theta) const override;
  bool diffusion_derivative(const State& x, const ParamVector& theta, Noise& out) const override;
  bool has_scalar_coefficients() const override { return true; }
  void scalar_coefficients(double x, const ParamVector& theta, double& mu, double& sigma) const override;
};

/// Chemical Langevin equation: drift nu a(x), diffusion nu diag(sqrt a(x)).
/// Hazards are evaluated at max(x, 0); negative hazards are set to zero
/// under the square root only.
class ChemicalLangevinModel final : public SdeModel {
 public:
  using Hazards = std::function<Noise(const State& x, const ParamVector& theta)>;

  ChemicalLangevinModel(std::string id, Eigen::MatrixXd stoichiometry, Hazards hazards,
                        std::vector<std::string> param_names, PriorBox prior);

  std::string id() const override { return id_; }
  int state_dim() const override { return static_cast<int>(nu_.rows()); }
  int noise_dim() const override { return static_cast<int>(nu_.cols()); }
  std::vector<std::string> param_names() const override { return names_; }
  State drift(const State& x, const ParamVector& theta) const override;
  DiffusionMatrix diffusion(const State& x, const ParamVector& theta) const override;

  Noise hazards(const State& x, const ParamVector& theta) const;

 private:
  std::string id_;
  Eigen::MatrixXd nu_;
  Hazards hazards_;
  std::vector<std::string> names_;
};

/// Model from plain callables, for tests and ad hoc experiments.
class FunctionalModel final : public SdeModel {
 public:
  using Drift = std::function<State(const State&, const ParamVector&)>;
  using Diffusion = std::function<DiffusionMatrix(const State&, const ParamVector&)>;

  FunctionalModel(std::string id, int state_dim, int noise_dim, std::vector<std::string> param_names,
                  Drift drift, Diffusion diffusion, PriorBox prior,
                  std::optional<double> floor = std::nullopt);

  std::string id() const override { return id_; }
  int state_dim() const override { return d_; }
  int noise_dim() const override { return m_; }
  std::vector<std::string> param_names() const override { return names_; }
  State drift(const State& x, const ParamVector& theta) const override { return drift_(x, theta); }
  DiffusionMatrix diffusion(const State& x, const ParamVector& theta) const override {
    return diffusion_(x, theta);
  }

 private:
  std::string id_;
  int d_;
  int m_;
  std::vector<std::string> names_;
  Drift drift_;
  Diffusion diffusion_;
};

inline constexpr double kSchloglA = 1e5;
inline constexpr double kSchloglB = 2e5;
inline constexpr double kSchloglTheta3 = 1e-3;

/// Registered ids: ou, cir, ckls, nonlinear, lotka-volterra, schlogl.
std::shared_ptr<SdeModel> make_model(const std::string& id);
std::vector<std::string> model_ids();

}  // namespace dcabc
