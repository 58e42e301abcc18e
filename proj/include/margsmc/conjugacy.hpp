#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "margsmc/density.hpp"
#include "margsmc/rng.hpp"
#include "margsmc/util.hpp"

namespace margsmc {

// Natural hyperparameters of a conjugate prior: pi(theta | chi, nu) is
// proportional to exp(theta' chi - A(theta)' nu). Data arrives as sufficient
// statistics (s, r) and updates by plain addition: chi += s, nu += r.
struct HyperParams {
  SVec chi;
  SVec nu;
};

struct SuffStat {
  SVec s;
  SVec r;
};

// Flat parameter draw; the layout is documented per family.
using ParamDraw = Eigen::VectorXd;

// A conjugate prior family for a block of static parameters, exposed through
// its log normalizer g(chi, nu). Everything the samplers need reduces to
// log g evaluations, hyperparameter addition, and posterior draws.
//
// Families may be products of independent channels. Channels matter for
// speed only: a sufficient statistic that is identically zero on a channel
// leaves that channel's normalizer untouched, so cached per-channel values
// can be reused.
class ConjugateFamily {
 public:
  struct ChannelLayout {
    int chi_off, chi_len, nu_off, nu_len;
  };

  virtual ~ConjugateFamily() = default;

  virtual std::string name() const = 0;
  virtual int chi_dim() const = 0;
  virtual int nu_dim() const = 0;
  virtual int param_dim() const = 0;

  virtual int num_channels() const { return 1; }
  virtual ChannelLayout channel(int c) const;

  virtual bool valid(const HyperParams& hp) const = 0;

  // log g for one channel, reading chi/nu at the channel's own offsets.
  virtual double log_g_channel(int c, const double* chi, const double* nu) const = 0;

  double log_g(const HyperParams& hp) const;

  // Same, reading full-length chi/nu buffers directly (hot paths).
  double log_g_raw(const double* chi, const double* nu) const {
    double total = 0.0;
    for (int c = 0; c < num_channels(); ++c) {
      const ChannelLayout l = channel(c);
      total += log_g_channel(c, chi + l.chi_off, nu + l.nu_off);
    }
    return total;
  }

  // theta' s - A(theta)' r; together with the base measure this reconstructs
  // the conditional log density of one transition.
  virtual double natural_dot(const ParamDraw& theta, const SuffStat& st) const = 0;

  // Draw theta ~ pi(. | hp). Throws on invalid hp.
  virtual ParamDraw sample_posterior(const HyperParams& hp, RngStream& rng) const = 0;

  // Posterior as a Density (exists for single-channel families; products
  // sample channel-wise instead).
  virtual Density posterior_density(const HyperParams& hp) const;

  virtual std::vector<std::string> param_names() const = 0;
};

// --- concrete families ---------------------------------------------------

// Unknown Gaussian noise variance with an inverse-gamma prior IG(alpha, beta).
// Encoding: chi = (beta), nu = (alpha + 1). A residual e contributes
// s = e^2 / 2, r = 1/2. theta = (variance).
class IgVariance final : public ConjugateFamily {
 public:
  static HyperParams prior(double alpha, double beta);
  static double alpha_of(const HyperParams& hp) { return hp.nu[0] - 1.0; }
  static double beta_of(const HyperParams& hp) { return hp.chi[0]; }
  static SuffStat residual_stat(double residual);

  std::string name() const override { return "ig-variance"; }
  int chi_dim() const override { return 1; }
  int nu_dim() const override { return 1; }
  int param_dim() const override { return 1; }
  bool valid(const HyperParams& hp) const override;
  double log_g_channel(int, const double* chi, const double* nu) const override;
  double natural_dot(const ParamDraw& theta, const SuffStat& st) const override;
  ParamDraw sample_posterior(const HyperParams& hp, RngStream& rng) const override;
  Density posterior_density(const HyperParams& hp) const override;
  std::vector<std::string> param_names() const override { return {"variance"}; }
};

// Linear-Gaussian regression z = u' b + sigma * noise with unknown (b, sigma^2)
// under a normal-inverse-gamma prior: b | sigma^2 ~ N(mu, sigma^2 Lambda^-1),
// sigma^2 ~ IG(alpha, beta).
//
// Encoding: chi = (Lambda mu, -(beta + mu' Lambda mu / 2)),
//           nu  = (vec(Lambda / 2) row-major, alpha + d/2 + 1).
// A data point (z, u) contributes s = (z u, -z^2 / 2),
//           r = (vec(u u' / 2), 1/2). theta = (b..., variance).
class NigRegression final : public ConjugateFamily {
 public:
  explicit NigRegression(int d);

  static HyperParams prior(const Eigen::VectorXd& mu, const Eigen::MatrixXd& lambda, double alpha,
                           double beta);
  static SuffStat data_stat(double z, const Eigen::VectorXd& u);

  // Decoded conventional parameters.
  struct Decoded {
    Eigen::VectorXd mu;
    Eigen::MatrixXd lambda;
    double alpha, beta;
  };
  Decoded decode(const HyperParams& hp) const;

  std::string name() const override { return "nig-regression"; }
  int chi_dim() const override { return d_ + 1; }
  int nu_dim() const override { return d_ * d_ + 1; }
  int param_dim() const override { return d_ + 1; }
  bool valid(const HyperParams& hp) const override;
  double log_g_channel(int, const double* chi, const double* nu) const override;
  double natural_dot(const ParamDraw& theta, const SuffStat& st) const override;
  ParamDraw sample_posterior(const HyperParams& hp, RngStream& rng) const override;
  Density posterior_density(const HyperParams& hp) const override;
  std::vector<std::string> param_names() const override;

  int dims() const { return d_; }

 private:
  int d_;
};

// Success probability of a binomial observation channel with a Beta(a, b)
// prior. Encoding: chi = (a, b) pseudo-counts, nu is empty. An observation of
// y successes out of x trials contributes s = (y, x - y). theta = (prob).
class BetaBinomial final : public ConjugateFamily {
 public:
  static HyperParams prior(double a, double b);
  static SuffStat count_stat(double successes, double trials);

  std::string name() const override { return "beta-binomial"; }
  int chi_dim() const override { return 2; }
  int nu_dim() const override { return 0; }
  int param_dim() const override { return 1; }
  bool valid(const HyperParams& hp) const override;
  double log_g_channel(int, const double* chi, const double* nu) const override;
  double natural_dot(const ParamDraw& theta, const SuffStat& st) const override;
  ParamDraw sample_posterior(const HyperParams& hp, RngStream& rng) const override;
  Density posterior_density(const HyperParams& hp) const override;
  std::vector<std::string> param_names() const override { return {"prob"}; }
};

// Product of independent conjugate blocks; hyperparameters, statistics and
// parameter draws are concatenations of the components'.
class ProductFamily final : public ConjugateFamily {
 public:
  ProductFamily(std::vector<std::shared_ptr<const ConjugateFamily>> components,
                std::vector<std::string> labels = {});

  static HyperParams concat_hp(const std::vector<HyperParams>& parts);
  static SuffStat concat_stat(const std::vector<SuffStat>& parts);

  std::string name() const override { return "product"; }
  int chi_dim() const override { return chi_dim_; }
  int nu_dim() const override { return nu_dim_; }
  int param_dim() const override { return param_dim_; }
  int num_channels() const override { return n_channels_; }
  ChannelLayout channel(int c) const override { return layout_[c]; }
  bool valid(const HyperParams& hp) const override;
  double log_g_channel(int c, const double* chi, const double* nu) const override;
  double natural_dot(const ParamDraw& theta, const SuffStat& st) const override;
  ParamDraw sample_posterior(const HyperParams& hp, RngStream& rng) const override;
  std::vector<std::string> param_names() const override;

  const ConjugateFamily& component(int i) const { return *components_[i]; }

 private:
  std::vector<std::shared_ptr<const ConjugateFamily>> components_;
  std::vector<std::string> labels_;
  std::vector<ChannelLayout> layout_;       // one entry per flattened channel
  std::vector<int> channel_component_;      // flattened channel -> component
  std::vector<int> channel_local_;          // flattened channel -> channel within component
  std::vector<int> param_off_;
  int chi_dim_ = 0, nu_dim_ = 0, param_dim_ = 0, n_channels_ = 0;
};

// --- free operations -------------------------------------------------------

// chi += s, nu += r. Dimension mismatches throw.
HyperParams update_hyperparams(const HyperParams& hp, const SuffStat& st);

// Inverse of update_hyperparams; throws if the result leaves the family's
// valid region (checked via fam).
HyperParams downdate_hyperparams(const ConjugateFamily& fam, const HyperParams& hp,
                                 const SuffStat& st);

// Marginal log density of one transition: log_base + log g(hp) - log g(hp + st).
// log_base carries the parameter-free factor of the joint transition density.
// Returns -inf when log_base is -inf or the result is not finite.
double predictive_logpdf(const ConjugateFamily& fam, const HyperParams& hp, const SuffStat& st,
                         double log_base);

}  // namespace margsmc
