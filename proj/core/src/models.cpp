#include "dcabc/models.hpp"

#include <cmath>
#include <random>

#include "dcabc/error.hpp"
#include "dcabc/transitions.hpp"

namespace dcabc {

namespace {

PriorBox box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(lo.size()));
  Eigen::VectorXd u(static_cast<Eigen::Index>(hi.size()));
  Eigen::Index i = 0;
  for (double v : lo) l[i++] = v;
  i = 0;
  for (double v : hi) u[i++] = v;
  return PriorBox(std::move(l), std::move(u));
}

State scalar_state(double v) {
  State s(1);
  s[0] = v;
  return s;
}

PriorBox ckls_prior(CklsModel::Variant v) {
  switch (v) {
    case CklsModel::Variant::Ou: return box({0, 0, 0}, {30, 10, 2});
    case CklsModel::Variant::Cir: return box({0, 0, 0}, {20, 10, 3});
    case CklsModel::Variant::Ckls: break;
  }
  return box({0, 0, 0, 0}, {40, 10, 2, 1});
}

std::optional<double> ckls_floor(CklsModel::Variant v) {
  if (v == CklsModel::Variant::Ou) return std::nullopt;
  return 1e-6;
}

}  // namespace

bool SdeModel::diffusion_derivative(const State&, const ParamVector&, Noise&) const { return false; }

void SdeModel::scalar_coefficients(double, const ParamVector&, double&, double&) const {
  throw DomainError(id() + ": no scalar coefficients");
}

double SdeModel::exact_transition_logpdf(const State&, const State&, const ParamVector&, double) const {
  throw DomainError(id() + ": no exact transition density");
}

State SdeModel::sample_exact_transition(const State&, const ParamVector&, double, Engine&) const {
  throw DomainError(id() + ": no exact transition sampler");
}

void SdeModel::set_prior(PriorBox prior) {
  if (prior.dim() != param_dim()) throw DomainError(id() + ": prior dimension does not match parameters");
  prior_ = std::move(prior);
}

// ---------------------------------------------------------------------------

CklsModel::CklsModel(Variant variant) : SdeModel(ckls_prior(variant), ckls_floor(variant)), variant_(variant) {}

std::string CklsModel::id() const {
  switch (variant_) {
    case Variant::Ou: return "ou";
    case Variant::Cir: return "cir";
    case Variant::Ckls: break;
  }
  return "ckls";
}

std::vector<std::string> CklsModel::param_names() const {
  if (variant_ == Variant::Ckls) return {"alpha", "beta", "sigma", "gamma"};
  return {"alpha", "beta", "sigma"};
}

double CklsModel::gamma(const ParamVector& theta) const {
  switch (variant_) {
    case Variant::Ou: return 0.0;
    case Variant::Cir: return 0.5;
    case Variant::Ckls: break;
  }
  return theta[3];
}

void CklsModel::scalar_coefficients(double x, const ParamVector& theta, double& mu, double& sigma) const {
  mu = theta[1] * (theta[0] - x);
  const double g = gamma(theta);
  sigma = g == 0.0 ? theta[2] : theta[2] * std::pow(x, g);
}

State CklsModel::drift(const State& x, const ParamVector& theta) const {
  double mu, sigma;
  scalar_coefficients(x[0], theta, mu, sigma);
  return scalar_state(mu);
}

DiffusionMatrix CklsModel::diffusion(const State& x, const ParamVector& theta) const {
  double mu, sigma;
  scalar_coefficients(x[0], theta, mu, sigma);
  DiffusionMatrix s(1, 1);
  s(0, 0) = sigma;
  return s;
}

bool CklsModel::diffusion_derivative(const State& x, const ParamVector& theta, Noise& out) const {
  out.resize(1);
  const double g = gamma(theta);
  out[0] = g == 0.0 ? 0.0 : theta[2] * g * std::pow(x[0], g - 1.0);
  return true;
}

double CklsModel::exact_transition_logpdf(const State& to, const State& from, const ParamVector& theta,
                                          double elapsed) const {
  if (variant_ == Variant::Ou) return ou_exact_transition_logpdf(to[0], from[0], theta, elapsed);
  if (variant_ == Variant::Cir) return cir_exact_transition_logpdf(to[0], from[0], theta, elapsed);
  return SdeModel::exact_transition_logpdf(to, from, theta, elapsed);
}

State CklsModel::sample_exact_transition(const State& from, const ParamVector& theta, double elapsed,
                                         Engine& rng) const {
  const double alpha = theta[0], beta = theta[1], sigma = theta[2];
  if (variant_ == Variant::Ou) {
    const OuMoments m = ou_transition_moments(from[0], theta, elapsed);
    std::normal_distribution<double> z(0.0, 1.0);
    return scalar_state(m.mean + std::sqrt(m.variance) * z(rng));
  }
  if (variant_ == Variant::Cir) {
    // 2c X_t is noncentral chi-square; draw it as a Poisson mixture of gammas.
    const double c = 2.0 * beta / (sigma * sigma * -std::expm1(-beta * elapsed));
    const double u = c * from[0] * std::exp(-beta * elapsed);
    const double q = 2.0 * alpha * beta / (sigma * sigma) - 1.0;
    std::poisson_distribution<long> pois(u);
    const long n = u > 0.0 ? pois(rng) : 0;
    std::gamma_distribution<double> gam(q + 1.0 + static_cast<double>(n), 1.0);
    return scalar_state(std::max(gam(rng) / c, *state_floor()));
  }
  return SdeModel::sample_exact_transition(from, theta, elapsed, rng);
}

// ---------------------------------------------------------------------------

NonlinearDriftModel::NonlinearDriftModel() : SdeModel(box({0, 0, 0}, {30, 10, 2}), 1e-6) {}

void NonlinearDriftModel::scalar_coefficients(double x, const ParamVector& theta, double& mu,
                                              double& sigma) const {
  const double r = std::sqrt(std::max(x, 0.0));
  mu = theta[1] * theta[0] - theta[1] * x + r;
  sigma = theta[2] * r;
}

State NonlinearDriftModel::drift(const State& x, const ParamVector& theta) const {
  double mu, sigma;
  scalar_coefficients(x[0], theta, mu, sigma);
  return scalar_state(mu);
}

DiffusionMatrix NonlinearDriftModel::diffusion(const State& x, const ParamVector& theta) const {
  double mu, sigma;
  scalar_coefficients(x[0], theta, mu, sigma);
  DiffusionMatrix s(1, 1);
  s(0, 0) = sigma;
  return s;
}

bool NonlinearDriftModel::diffusion_derivative(const State& x, const ParamVector& theta, Noise& out) const {
  out.resize(1);
  out[0] = 0.5 * theta[2] / std::sqrt(x[0]);
  return true;
}

// ---------------------------------------------------------------------------

ChemicalLangevinModel::ChemicalLangevinModel(std::string id, Eigen::MatrixXd stoichiometry, Hazards hazards,
                                             std::vector<std::string> param_names, PriorBox prior)
    : SdeModel(std::move(prior), 0.0),
      id_(std::move(id)),
      nu_(std::move(stoichiometry)),
      hazards_(std::move(hazards)),
      names_(std::move(param_names)) {
  if (nu_.rows() > kMaxStateDim || nu_.cols() > kMaxNoiseDim)
    throw DomainError(id_ + ": stoichiometry exceeds supported dimensions");
}

Noise ChemicalLangevinModel::hazards(const State& x, const ParamVector& theta) const {
  return hazards_(x.cwiseMax(0.0), theta);
}

State ChemicalLangevinModel::drift(const State& x, const ParamVector& theta) const {
  const Noise a = hazards(x, theta);
  return nu_ * a;
}

DiffusionMatrix ChemicalLangevinModel::diffusion(const State& x, const ParamVector& theta) const {
  const Noise a = hazards(x, theta);
  DiffusionMatrix s(nu_.rows(), nu_.cols());
  for (Eigen::Index j = 0; j < nu_.cols(); ++j) s.col(j) = nu_.col(j) * std::sqrt(std::max(a[j], 0.0));
  return s;
}

// ---------------------------------------------------------------------------

FunctionalModel::FunctionalModel(std::string id, int state_dim, int noise_dim,
                                 std::vector<std::string> param_names, Drift drift, Diffusion diffusion,
                                 PriorBox prior, std::optional<double> floor)
    : SdeModel(std::move(prior), floor),
      id_(std::move(id)),
      d_(state_dim),
      m_(noise_dim),
      names_(std::move(param_names)),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)) {
  if (d_ < 1 || d_ > kMaxStateDim || m_ < 1 || m_ > kMaxNoiseDim)
    throw DomainError(id_ + ": unsupported state or noise dimension");
}

// ---------------------------------------------------------------------------

static std::shared_ptr<SdeModel> make_lotka_volterra() {
  Eigen::MatrixXd nu(2, 3);
  nu << 1, -1, 0, 0, 1, -1;
  auto hazards = [](const State& x, const ParamVector& th) {
    Noise a(3);
    a << th[0] * x[0], th[1] * x[0] * x[1], th[2] * x[1];
    return a;
  };
  return std::make_shared<ChemicalLangevinModel>("lotka-volterra", std::move(nu), hazards,
                                                 std::vector<std::string>{"theta1", "theta2", "theta3"},
                                                 box({0, 0, 0}, {1, 0.05, 1}));
}

static std::shared_ptr<SdeModel> make_schlogl() {
  Eigen::MatrixXd nu(1, 4);
  nu << 1, -1, 1, -1;
  // theta = (theta1, theta2, theta4); theta3 is held fixed.
  auto hazards = [](const State& x, const ParamVector& th) {
    const double X = x[0];
    Noise a(4);
    a << th[0] * kSchloglA * X * (X - 1.0) / 2.0, th[1] * X * (X - 1.0) * (X - 2.0) / 6.0,
        kSchloglTheta3 * kSchloglB, th[2] * X;
    return a;
  };
  return std::make_shared<ChemicalLangevinModel>("schlogl", std::move(nu), hazards,
                                                 std::vector<std::string>{"theta1", "theta2", "theta4"},
                                                 box({1.6e-7, 0, 1}, {4e-6, 5e-4, 8}));
}

std::shared_ptr<SdeModel> make_model(const std::string& id) {
  if (id == "ou") return std::make_shared<CklsModel>(CklsModel::Variant::Ou);
  if (id == "cir") return std::make_shared<CklsModel>(CklsModel::Variant::Cir);
  if (id == "ckls") return std::make_shared<CklsModel>(CklsModel::Variant::Ckls);
  if (id == "nonlinear") return std::make_shared<NonlinearDriftModel>();
  if (id == "lotka-volterra") return make_lotka_volterra();
  if (id == "schlogl") return make_schlogl();
  throw DomainError("unknown model '" + id + "'");
}

std::vector<std::string> model_ids() { return {"ou", "cir", "ckls", "nonlinear", "lotka-volterra", "schlogl"}; }

}  // namespace dcabc
