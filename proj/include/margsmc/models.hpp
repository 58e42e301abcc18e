#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "margsmc/conjugacy.hpp"
#include "margsmc/density.hpp"
#include "margsmc/rng.hpp"

namespace margsmc {

// Scalar-state state-space model whose joint transition density
// p(x_t, y_t | x_{t-1}, theta) lies in a restricted exponential family:
//   exp(log_base(x_t, x_{t-1}, y_t, t)) * exp(theta' s - A(theta)' r).
// The statistic split into a transition channel and the rest is what the
// marginal (parameter-free) proposals and weights are built from.
//
// Time indices are 1-based: x_0 is the initial state, (x_t, y_t) for t >= 1.
class Ssm {
 public:
  virtual ~Ssm() = default;

  virtual std::string name() const = 0;
  virtual const ConjugateFamily& family() const = 0;
  virtual HyperParams prior_hyperparams() const = 0;

  virtual double sample_initial(RngStream& rng) const = 0;
  virtual double log_initial(double x0) const = 0;

  // theta-conditioned components (used by the non-marginalized samplers and
  // by simulation).
  virtual double sample_transition(double x_prev, int t, const ParamDraw& theta,
                                   RngStream& rng) const = 0;
  virtual double sample_observation(double x, int t, const ParamDraw& theta,
                                    RngStream& rng) const = 0;
  virtual double log_transition(double x, double x_prev, int t, const ParamDraw& theta) const = 0;
  virtual double log_observation(double y, double x, int t, const ParamDraw& theta) const = 0;

  // Exponential-family binding for the joint step density.
  virtual SuffStat suffstat(double x, double x_prev, double y, int t) const = 0;
  virtual double log_base(double x, double x_prev, double y, int t) const = 0;
  // Transition-channel share of the statistic (zero on observation channels).
  virtual SuffStat suffstat_transition(double x, double x_prev, int t) const = 0;
  virtual double log_base_transition(double x, double x_prev, int t) const = 0;

  // Draw from the marginal transition p(x_t | x_{t-1}, chi, nu), i.e. the
  // transition predictive under the current parameter posterior.
  virtual double sample_marginal_transition(double x_prev, int t, const HyperParams& hp,
                                            RngStream& rng) const = 0;

  // Rejects degenerate parameter values (zero variances and the like) that
  // would make the model deterministic.
  virtual void validate_params(const ParamDraw& theta) const = 0;

  // Optional non-conjugate static parameter, sampled by random-walk moves.
  virtual bool has_unmarginalized_param() const { return false; }
  virtual double unmarginalized_param() const;
  virtual std::unique_ptr<Ssm> rebind_unmarginalized(double value) const;
  virtual Density unmarginalized_prior() const;

  std::vector<std::string> param_names() const { return family().param_names(); }
};

struct SimulatedPath {
  Eigen::VectorXd states;  // x_0 .. x_T
  Eigen::VectorXd obs;     // y_1 .. y_T
};

SimulatedPath simulate(const Ssm& model, const ParamDraw& theta, int T, RngStream& rng);

// --- benchmark model --------------------------------------------------------

// x_t = x/2 + 25 x / (1 + x^2) + 8 cos(1.2 t) + v_t,  y_t = x_t^2 / 20 + w_t,
// with v, w zero-mean Gaussian of unknown variance (independent IG priors)
// and x_0 ~ N(x0_mean, x0_var). theta = (var_v, var_w).
double benchmark_mean(double x_prev, int t);

class BenchmarkModel final : public Ssm {
 public:
  BenchmarkModel(double alpha_v, double beta_v, double alpha_w, double beta_w, double x0_mean = 0.0,
                 double x0_var = 5.0);

  std::string name() const override { return "benchmark"; }
  const ConjugateFamily& family() const override { return *family_; }
  HyperParams prior_hyperparams() const override { return prior_; }
  double sample_initial(RngStream& rng) const override;
  double log_initial(double x0) const override;
  double sample_transition(double x_prev, int t, const ParamDraw& theta,
                           RngStream& rng) const override;
  double sample_observation(double x, int t, const ParamDraw& theta, RngStream& rng) const override;
  double log_transition(double x, double x_prev, int t, const ParamDraw& theta) const override;
  double log_observation(double y, double x, int t, const ParamDraw& theta) const override;
  SuffStat suffstat(double x, double x_prev, double y, int t) const override;
  double log_base(double x, double x_prev, double y, int t) const override;
  SuffStat suffstat_transition(double x, double x_prev, int t) const override;
  double log_base_transition(double x, double x_prev, int t) const override;
  double sample_marginal_transition(double x_prev, int t, const HyperParams& hp,
                                    RngStream& rng) const override;
  void validate_params(const ParamDraw& theta) const override;

 private:
  std::shared_ptr<const ProductFamily> family_;
  HyperParams prior_;
  double x0_mean_, x0_var_;
};

// --- linear-Gaussian model ----------------------------------------------------

// x_t = phi x_{t-1} + v_t, y_t = x_t + w_t; same unknown-variance structure as
// the benchmark model. Exists so exact Kalman results are available as a
// reference in tests.
class LinearGaussianModel final : public Ssm {
 public:
  LinearGaussianModel(double phi, double alpha_v, double beta_v, double alpha_w, double beta_w,
                      double x0_mean = 0.0, double x0_var = 1.0);

  std::string name() const override { return "linear-gaussian"; }
  const ConjugateFamily& family() const override { return *family_; }
  HyperParams prior_hyperparams() const override { return prior_; }
  double sample_initial(RngStream& rng) const override;
  double log_initial(double x0) const override;
  double sample_transition(double x_prev, int t, const ParamDraw& theta,
                           RngStream& rng) const override;
  double sample_observation(double x, int t, const ParamDraw& theta, RngStream& rng) const override;
  double log_transition(double x, double x_prev, int t, const ParamDraw& theta) const override;
  double log_observation(double y, double x, int t, const ParamDraw& theta) const override;
  SuffStat suffstat(double x, double x_prev, double y, int t) const override;
  double log_base(double x, double x_prev, double y, int t) const override;
  SuffStat suffstat_transition(double x, double x_prev, int t) const override;
  double log_base_transition(double x, double x_prev, int t) const override;
  double sample_marginal_transition(double x_prev, int t, const HyperParams& hp,
                                    RngStream& rng) const override;
  void validate_params(const ParamDraw& theta) const override;

  double phi() const { return phi_; }
  double x0_mean() const { return x0_mean_; }
  double x0_var() const { return x0_var_; }

 private:
  std::shared_ptr<const ProductFamily> family_;
  HyperParams prior_;
  double phi_, x0_mean_, x0_var_;
};

// --- population model ---------------------------------------------------------

// Stochastic Gompertz-type population dynamics on the log scale. With
// x_t = log n_t, the growth increment regresses on u = (1, n_{t-1}^c):
//   x_t = x_{t-1} + b' u + v_t,  y_t = exp(x_t) + w_t,
// i.e. the count itself is observed with additive noise. (b, var_v) carry a
// normal-inverse-gamma prior, var_w an inverse-gamma prior, and the density
// regulation exponent c stays outside the conjugate block (random-walk moves
// with a Gaussian prior). theta = (b1, b2, var_v, var_w).
Eigen::Vector2d population_regressors(double x_prev, double c);

class PopulationModel final : public Ssm {
 public:
  PopulationModel(double c, const Eigen::Vector2d& mu, const Eigen::Matrix2d& lambda,
                  double alpha_v, double beta_v, double alpha_w, double beta_w, double x0_mean,
                  double x0_var, double c_prior_var = 1.0);

  std::string name() const override { return "population"; }
  const ConjugateFamily& family() const override { return *family_; }
  HyperParams prior_hyperparams() const override { return prior_; }
  double sample_initial(RngStream& rng) const override;
  double log_initial(double x0) const override;
  double sample_transition(double x_prev, int t, const ParamDraw& theta,
                           RngStream& rng) const override;
  double sample_observation(double x, int t, const ParamDraw& theta, RngStream& rng) const override;
  double log_transition(double x, double x_prev, int t, const ParamDraw& theta) const override;
  double log_observation(double y, double x, int t, const ParamDraw& theta) const override;
  SuffStat suffstat(double x, double x_prev, double y, int t) const override;
  double log_base(double x, double x_prev, double y, int t) const override;
  SuffStat suffstat_transition(double x, double x_prev, int t) const override;
  double log_base_transition(double x, double x_prev, int t) const override;
  double sample_marginal_transition(double x_prev, int t, const HyperParams& hp,
                                    RngStream& rng) const override;
  void validate_params(const ParamDraw& theta) const override;

  bool has_unmarginalized_param() const override { return true; }
  double unmarginalized_param() const override { return c_; }
  std::unique_ptr<Ssm> rebind_unmarginalized(double value) const override;
  Density unmarginalized_prior() const override;

 private:
  std::shared_ptr<const ProductFamily> family_;
  std::shared_ptr<const NigRegression> nig_;
  HyperParams prior_;
  double c_;
  Eigen::Vector2d mu_;
  Eigen::Matrix2d lambda_;
  double alpha_v_, beta_v_, alpha_w_, beta_w_;
  double x0_mean_, x0_var_, c_prior_var_;
};

// --- epidemic model -------------------------------------------------------------

// Decay phase of an outbreak: the infected count thins by a known survival
// probability, and a fraction of the infected is detected with unknown
// reporting probability (beta prior, marginalized).
//   x_t ~ Binomial(x_{t-1}, survival),  y_t ~ Binomial(x_t, rho).
// States are integer counts stored as doubles; x_0 is a known count.
// theta = (rho).
class EpidemicModel final : public Ssm {
 public:
  EpidemicModel(long x0, double survival, double a, double b);

  std::string name() const override { return "epidemic"; }
  const ConjugateFamily& family() const override { return family_; }
  HyperParams prior_hyperparams() const override { return prior_; }
  double sample_initial(RngStream& rng) const override;
  double log_initial(double x0) const override;
  double sample_transition(double x_prev, int t, const ParamDraw& theta,
                           RngStream& rng) const override;
  double sample_observation(double x, int t, const ParamDraw& theta, RngStream& rng) const override;
  double log_transition(double x, double x_prev, int t, const ParamDraw& theta) const override;
  double log_observation(double y, double x, int t, const ParamDraw& theta) const override;
  SuffStat suffstat(double x, double x_prev, double y, int t) const override;
  double log_base(double x, double x_prev, double y, int t) const override;
  SuffStat suffstat_transition(double x, double x_prev, int t) const override;
  double log_base_transition(double x, double x_prev, int t) const override;
  double sample_marginal_transition(double x_prev, int t, const HyperParams& hp,
                                    RngStream& rng) const override;
  void validate_params(const ParamDraw& theta) const override;

 private:
  BetaBinomial family_;
  HyperParams prior_;
  long x0_;
  double survival_;
};

}  // namespace margsmc
