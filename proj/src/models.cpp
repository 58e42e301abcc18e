#include "margsmc/models.hpp"

#include <cmath>
#include <stdexcept>

namespace margsmc {

namespace {

double binomial_logpmf(double k, double n, double p) {
  if (k < 0.0 || k > n || k != std::floor(k) || n != std::floor(n)) return neg_inf;
  const double lp = (p > 0.0) ? k * std::log(p) : (k == 0.0 ? 0.0 : neg_inf);
  const double lq = (p < 1.0) ? (n - k) * std::log1p(-p) : (k == n ? 0.0 : neg_inf);
  if (lp == neg_inf || lq == neg_inf) return neg_inf;
  return log_binomial_coef(n, k) + lp + lq;
}

double gaussian_logpdf(double e, double var) {
  return -0.5 * (log_2pi + std::log(var)) - 0.5 * e * e / var;
}

std::shared_ptr<const ProductFamily> two_variance_family() {
  return std::make_shared<const ProductFamily>(
      std::vector<std::shared_ptr<const ConjugateFamily>>{std::make_shared<const IgVariance>(),
                                                          std::make_shared<const IgVariance>()},
      std::vector<std::string>{"v", "w"});
}

}  // namespace

double Ssm::unmarginalized_param() const {
  throw std::logic_error("Ssm: model has no unmarginalized parameter");
}

std::unique_ptr<Ssm> Ssm::rebind_unmarginalized(double) const {
  throw std::logic_error("Ssm: model has no unmarginalized parameter");
}

Density Ssm::unmarginalized_prior() const {
  throw std::logic_error("Ssm: model has no unmarginalized parameter");
}

SimulatedPath simulate(const Ssm& model, const ParamDraw& theta, int T, RngStream& rng) {
  require(T >= 1, "simulate: T must be positive");
  model.validate_params(theta);
  SimulatedPath out;
  out.states.resize(T + 1);
  out.obs.resize(T);
  out.states[0] = model.sample_initial(rng);
  for (int t = 1; t <= T; ++t) {
    out.states[t] = model.sample_transition(out.states[t - 1], t, theta, rng);
    out.obs[t - 1] = model.sample_observation(out.states[t], t, theta, rng);
  }
  return out;
}

// --- BenchmarkModel -----------------------------------------------------------

double benchmark_mean(double x_prev, int t) {
  return 0.5 * x_prev + 25.0 * x_prev / (1.0 + x_prev * x_prev) + 8.0 * std::cos(1.2 * t);
}

BenchmarkModel::BenchmarkModel(double alpha_v, double beta_v, double alpha_w, double beta_w,
                               double x0_mean, double x0_var)
    : family_(two_variance_family()), x0_mean_(x0_mean), x0_var_(x0_var) {
  require(x0_var > 0.0, "BenchmarkModel: x0_var must be positive");
  prior_ = ProductFamily::concat_hp({IgVariance::prior(alpha_v, beta_v),
                                     IgVariance::prior(alpha_w, beta_w)});
}

double BenchmarkModel::sample_initial(RngStream& rng) const {
  return x0_mean_ + std::sqrt(x0_var_) * rng.normal();
}

double BenchmarkModel::log_initial(double x0) const {
  return gaussian_logpdf(x0 - x0_mean_, x0_var_);
}

double BenchmarkModel::sample_transition(double x_prev, int t, const ParamDraw& theta,
                                         RngStream& rng) const {
  return benchmark_mean(x_prev, t) + std::sqrt(theta[0]) * rng.normal();
}

double BenchmarkModel::sample_observation(double x, int, const ParamDraw& theta,
                                          RngStream& rng) const {
  return x * x / 20.0 + std::sqrt(theta[1]) * rng.normal();
}

double BenchmarkModel::log_transition(double x, double x_prev, int t, const ParamDraw& theta) const {
  return gaussian_logpdf(x - benchmark_mean(x_prev, t), theta[0]);
}

double BenchmarkModel::log_observation(double y, double x, int, const ParamDraw& theta) const {
  return gaussian_logpdf(y - x * x / 20.0, theta[1]);
}

SuffStat BenchmarkModel::suffstat(double x, double x_prev, double y, int t) const {
  const double ev = x - benchmark_mean(x_prev, t);
  const double ew = y - x * x / 20.0;
  SuffStat st;
  st.s.resize(2);
  st.s << 0.5 * ev * ev, 0.5 * ew * ew;
  st.r.resize(2);
  st.r << 0.5, 0.5;
  return st;
}

double BenchmarkModel::log_base(double, double, double, int) const { return -log_2pi; }

SuffStat BenchmarkModel::suffstat_transition(double x, double x_prev, int t) const {
  const double ev = x - benchmark_mean(x_prev, t);
  SuffStat st;
  st.s.resize(2);
  st.s << 0.5 * ev * ev, 0.0;
  st.r.resize(2);
  st.r << 0.5, 0.0;
  return st;
}

double BenchmarkModel::log_base_transition(double, double, int) const { return -0.5 * log_2pi; }

double BenchmarkModel::sample_marginal_transition(double x_prev, int t, const HyperParams& hp,
                                                  RngStream& rng) const {
  // v-channel predictive of the residual is Student-t with 2 alpha dof and
  // scale sqrt(beta / alpha).
  const double alpha = hp.nu[0] - 1.0;
  const double beta = hp.chi[0];
  return benchmark_mean(x_prev, t) + std::sqrt(beta / alpha) * rng.student_t(2.0 * alpha);
}

void BenchmarkModel::validate_params(const ParamDraw& theta) const {
  require(theta.size() == 2, "BenchmarkModel: theta must be (var_v, var_w)");
  require(theta[0] > 0.0 && theta[1] > 0.0, "BenchmarkModel: variances must be positive");
}

// --- LinearGaussianModel --------------------------------------------------------

LinearGaussianModel::LinearGaussianModel(double phi, double alpha_v, double beta_v, double alpha_w,
                                         double beta_w, double x0_mean, double x0_var)
    : family_(two_variance_family()), phi_(phi), x0_mean_(x0_mean), x0_var_(x0_var) {
  require(x0_var > 0.0, "LinearGaussianModel: x0_var must be positive");
  prior_ = ProductFamily::concat_hp({IgVariance::prior(alpha_v, beta_v),
                                     IgVariance::prior(alpha_w, beta_w)});
}

double LinearGaussianModel::sample_initial(RngStream& rng) const {
  return x0_mean_ + std::sqrt(x0_var_) * rng.normal();
}

double LinearGaussianModel::log_initial(double x0) const {
  return gaussian_logpdf(x0 - x0_mean_, x0_var_);
}

double LinearGaussianModel::sample_transition(double x_prev, int, const ParamDraw& theta,
                                              RngStream& rng) const {
  return phi_ * x_prev + std::sqrt(theta[0]) * rng.normal();
}

double LinearGaussianModel::sample_observation(double x, int, const ParamDraw& theta,
                                               RngStream& rng) const {
  return x + std::sqrt(theta[1]) * rng.normal();
}

double LinearGaussianModel::log_transition(double x, double x_prev, int,
                                           const ParamDraw& theta) const {
  return gaussian_logpdf(x - phi_ * x_prev, theta[0]);
}

double LinearGaussianModel::log_observation(double y, double x, int, const ParamDraw& theta) const {
  return gaussian_logpdf(y - x, theta[1]);
}

SuffStat LinearGaussianModel::suffstat(double x, double x_prev, double y, int) const {
  const double ev = x - phi_ * x_prev;
  const double ew = y - x;
  SuffStat st;
  st.s.resize(2);
  st.s << 0.5 * ev * ev, 0.5 * ew * ew;
  st.r.resize(2);
  st.r << 0.5, 0.5;
  return st;
}

double LinearGaussianModel::log_base(double, double, double, int) const { return -log_2pi; }

SuffStat LinearGaussianModel::suffstat_transition(double x, double x_prev, int) const {
  const double ev = x - phi_ * x_prev;
  SuffStat st;
  st.s.resize(2);
  st.s << 0.5 * ev * ev, 0.0;
  st.r.resize(2);
  st.r << 0.5, 0.0;
  return st;
}

double LinearGaussianModel::log_base_transition(double, double, int) const {
  return -0.5 * log_2pi;
}

double LinearGaussianModel::sample_marginal_transition(double x_prev, int, const HyperParams& hp,
                                                       RngStream& rng) const {
  const double alpha = hp.nu[0] - 1.0;
  const double beta = hp.chi[0];
  return phi_ * x_prev + std::sqrt(beta / alpha) * rng.student_t(2.0 * alpha);
}

void LinearGaussianModel::validate_params(const ParamDraw& theta) const {
  require(theta.size() == 2, "LinearGaussianModel: theta must be (var_v, var_w)");
  require(theta[0] > 0.0 && theta[1] > 0.0, "LinearGaussianModel: variances must be positive");
}

// --- PopulationModel -------------------------------------------------------------

Eigen::Vector2d population_regressors(double x_prev, double c) {
  return Eigen::Vector2d(1.0, std::exp(c * x_prev));
}

PopulationModel::PopulationModel(double c, const Eigen::Vector2d& mu, const Eigen::Matrix2d& lambda,
                                 double alpha_v, double beta_v, double alpha_w, double beta_w,
                                 double x0_mean, double x0_var, double c_prior_var)
    : nig_(std::make_shared<const NigRegression>(2)),
      c_(c),
      mu_(mu),
      lambda_(lambda),
      alpha_v_(alpha_v),
      beta_v_(beta_v),
      alpha_w_(alpha_w),
      beta_w_(beta_w),
      x0_mean_(x0_mean),
      x0_var_(x0_var),
      c_prior_var_(c_prior_var) {
  require(x0_var > 0.0, "PopulationModel: x0_var must be positive");
  require(c_prior_var > 0.0, "PopulationModel: c_prior_var must be positive");
  family_ = std::make_shared<const ProductFamily>(
      std::vector<std::shared_ptr<const ConjugateFamily>>{nig_,
                                                          std::make_shared<const IgVariance>()},
      std::vector<std::string>{"growth", "obs"});
  prior_ = ProductFamily::concat_hp(
      {NigRegression::prior(mu, lambda, alpha_v, beta_v), IgVariance::prior(alpha_w, beta_w)});
}

double PopulationModel::sample_initial(RngStream& rng) const {
  return x0_mean_ + std::sqrt(x0_var_) * rng.normal();
}

double PopulationModel::log_initial(double x0) const {
  return gaussian_logpdf(x0 - x0_mean_, x0_var_);
}

double PopulationModel::sample_transition(double x_prev, int, const ParamDraw& theta,
                                          RngStream& rng) const {
  const Eigen::Vector2d u = population_regressors(x_prev, c_);
  return x_prev + theta[0] * u[0] + theta[1] * u[1] + std::sqrt(theta[2]) * rng.normal();
}

double PopulationModel::sample_observation(double x, int, const ParamDraw& theta,
                                           RngStream& rng) const {
  // The count itself is observed with additive noise, not its log.
  return std::exp(x) + std::sqrt(theta[3]) * rng.normal();
}

double PopulationModel::log_transition(double x, double x_prev, int, const ParamDraw& theta) const {
  const Eigen::Vector2d u = population_regressors(x_prev, c_);
  return gaussian_logpdf(x - x_prev - theta[0] * u[0] - theta[1] * u[1], theta[2]);
}

double PopulationModel::log_observation(double y, double x, int, const ParamDraw& theta) const {
  return gaussian_logpdf(y - std::exp(x), theta[3]);
}

SuffStat PopulationModel::suffstat(double x, double x_prev, double y, int) const {
  const Eigen::Vector2d u = population_regressors(x_prev, c_);
  const double z = x - x_prev;
  const double ew = y - std::exp(x);
  SuffStat st;
  st.s.resize(4);
  st.s << z * u[0], z * u[1], -0.5 * z * z, 0.5 * ew * ew;
  st.r.resize(6);
  st.r << 0.5 * u[0] * u[0], 0.5 * u[0] * u[1], 0.5 * u[1] * u[0], 0.5 * u[1] * u[1], 0.5, 0.5;
  return st;
}

double PopulationModel::log_base(double, double, double, int) const { return -log_2pi; }

SuffStat PopulationModel::suffstat_transition(double x, double x_prev, int) const {
  const Eigen::Vector2d u = population_regressors(x_prev, c_);
  const double z = x - x_prev;
  SuffStat st;
  st.s.resize(4);
  st.s << z * u[0], z * u[1], -0.5 * z * z, 0.0;
  st.r.resize(6);
  st.r << 0.5 * u[0] * u[0], 0.5 * u[0] * u[1], 0.5 * u[1] * u[0], 0.5 * u[1] * u[1], 0.5, 0.0;
  return st;
}

double PopulationModel::log_base_transition(double, double, int) const { return -0.5 * log_2pi; }

double PopulationModel::sample_marginal_transition(double x_prev, int, const HyperParams& hp,
                                                   RngStream& rng) const {
  // Regression predictive: z | u is Student-t with 2 alpha dof, location
  // u' mu and scale sqrt(beta (1 + u' Lambda^-1 u) / alpha).
  HyperParams nig_hp;
  nig_hp.chi = hp.chi.head(3);
  nig_hp.nu = hp.nu.head(5);
  const NigRegression::Decoded dec = nig_->decode(nig_hp);
  const Eigen::Vector2d u = population_regressors(x_prev, c_);
  const double spread = u.dot(dec.lambda.ldlt().solve(u));
  const double scale = std::sqrt(dec.beta * (1.0 + spread) / dec.alpha);
  const double z = u.dot(dec.mu) + scale * rng.student_t(2.0 * dec.alpha);
  return x_prev + z;
}

void PopulationModel::validate_params(const ParamDraw& theta) const {
  require(theta.size() == 4, "PopulationModel: theta must be (b1, b2, var_v, var_w)");
  require(theta[2] > 0.0 && theta[3] > 0.0, "PopulationModel: variances must be positive");
}

std::unique_ptr<Ssm> PopulationModel::rebind_unmarginalized(double value) const {
  return std::make_unique<PopulationModel>(value, mu_, lambda_, alpha_v_, beta_v_, alpha_w_,
                                           beta_w_, x0_mean_, x0_var_, c_prior_var_);
}

Density PopulationModel::unmarginalized_prior() const {
  return Density::gaussian(0.0, c_prior_var_);
}

// --- EpidemicModel ----------------------------------------------------------------

EpidemicModel::EpidemicModel(long x0, double survival, double a, double b)
    : prior_(BetaBinomial::prior(a, b)), x0_(x0), survival_(survival) {
  require(x0 >= 0, "EpidemicModel: x0 must be nonnegative");
  require(survival > 0.0 && survival < 1.0, "EpidemicModel: survival must lie in (0,1)");
}

double EpidemicModel::sample_initial(RngStream&) const { return static_cast<double>(x0_); }

double EpidemicModel::log_initial(double x0) const {
  return x0 == static_cast<double>(x0_) ? 0.0 : neg_inf;
}

double EpidemicModel::sample_transition(double x_prev, int, const ParamDraw&,
                                        RngStream& rng) const {
  return static_cast<double>(rng.binomial(static_cast<long>(x_prev), survival_));
}

double EpidemicModel::sample_observation(double x, int, const ParamDraw& theta,
                                         RngStream& rng) const {
  return static_cast<double>(rng.binomial(static_cast<long>(x), theta[0]));
}

double EpidemicModel::log_transition(double x, double x_prev, int, const ParamDraw&) const {
  return binomial_logpmf(x, x_prev, survival_);
}

double EpidemicModel::log_observation(double y, double x, int, const ParamDraw& theta) const {
  return binomial_logpmf(y, x, theta[0]);
}

SuffStat EpidemicModel::suffstat(double x, double, double y, int) const {
  return BetaBinomial::count_stat(y, x);
}

double EpidemicModel::log_base(double x, double x_prev, double y, int) const {
  // Reporting-probability-free factor: the choose term of the observation
  // channel plus the whole thinning transition.
  if (y < 0.0 || y > x || y != std::floor(y)) return neg_inf;
  const double trans = binomial_logpmf(x, x_prev, survival_);
  if (trans == neg_inf) return neg_inf;
  return log_binomial_coef(x, y) + trans;
}

SuffStat EpidemicModel::suffstat_transition(double, double, int) const {
  SuffStat st;
  st.s = SVec::Zero(2);
  st.r.resize(0);
  return st;
}

double EpidemicModel::log_base_transition(double x, double x_prev, int) const {
  return binomial_logpmf(x, x_prev, survival_);
}

double EpidemicModel::sample_marginal_transition(double x_prev, int, const HyperParams&,
                                                 RngStream& rng) const {
  return static_cast<double>(rng.binomial(static_cast<long>(x_prev), survival_));
}

void EpidemicModel::validate_params(const ParamDraw& theta) const {
  require(theta.size() == 1, "EpidemicModel: theta must be (rho)");
  require(theta[0] > 0.0 && theta[0] <= 1.0, "EpidemicModel: rho must lie in (0,1]");
}

}  // namespace margsmc
