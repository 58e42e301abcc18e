#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "margsmc/conjugacy.hpp"
#include "margsmc/models.hpp"
#include "margsmc/rng.hpp"

namespace margsmc {

// Either a fixed parameter draw (theta-conditioned sweep) or prior
// hyperparameters (marginalized sweep, parameters integrated out on the fly).
using ParamsOrMarginal = std::variant<ParamDraw, HyperParams>;

struct Proposal {
  enum class Kind { bootstrap, marginal_bootstrap, custom };

  // Custom proposals evaluate to a Density; hp is the proposing particle's
  // current hyperparameters in marginalized sweeps, null otherwise.
  using Factory = std::function<Density(int t, double x_prev, const HyperParams* hp)>;

  Kind kind = Kind::bootstrap;
  Factory factory;

  static Proposal bootstrap() { return {Kind::bootstrap, nullptr}; }
  static Proposal marginal_bootstrap() { return {Kind::marginal_bootstrap, nullptr}; }
  static Proposal custom(Factory f) { return {Kind::custom, std::move(f)}; }
};

struct ParticleSystem {
  Eigen::MatrixXd states;      // (T+1) x N; row t holds the time-t particles
  Eigen::MatrixXi ancestors;   // T x N; ancestors(t-1, i) is the parent of particle i at step t
  Eigen::ArrayXd log_weights;  // unnormalized, final step
  Eigen::ArrayXd norm_weights; // normalized, final step
  Eigen::MatrixXd chi, nu;     // per-particle hyperparameters at the final step (marginal sweeps)
  Eigen::VectorXd logz_steps;  // T+1 log evidence increments; [0] = 0 by construction
  int t_offset = 0;            // model time of the initial slot

  int num_steps() const { return static_cast<int>(states.rows()) - 1; }
  int num_particles() const { return static_cast<int>(states.cols()); }
  double log_evidence() const { return logz_steps.sum(); }

  // Ancestral path of final-step particle i: (x_0, ..., x_T).
  Eigen::VectorXd trajectory(int i) const;
};

// A conditioning trajectory together with its per-step sufficient statistics.
struct ReferenceState {
  Eigen::VectorXd trajectory;        // x_0 .. x_T
  std::vector<SuffStat> step_stats;  // statistic of step t stored at [t-1]
  int t_offset = 0;

  int num_steps() const { return static_cast<int>(step_stats.size()); }
  SuffStat total() const;
};

ReferenceState make_reference(const Ssm& model, const Eigen::VectorXd& trajectory,
                              const Eigen::VectorXd& y, int t_offset = 0);

// Suffix sums s_{t:T} of per-step statistics, maintained by subtracting the
// leading step. Ends at exactly zero after the last pop.
class StatTail {
 public:
  explicit StatTail(const std::vector<SuffStat>& steps);
  void pop_front(const SuffStat& leading);
  const SuffStat& current() const { return tail_; }

 private:
  SuffStat tail_;
};

struct SweepOptions {
  int num_particles = 100;
  Proposal proposal = Proposal::bootstrap();
  bool ancestor_sampling = false;
  int threads = 1;
  int t_offset = 0;  // model time of the initial slot (blocked windows)
  std::optional<double> fixed_initial;               // pin x_0 (blocked suffix window)
  std::function<double(double)> final_logfactor;     // extra weight factor at the last step
};

// --- single-transition building blocks ---------------------------------------

// Multinomial draws from normalized weights; validates the weight vector.
Eigen::ArrayXi resample_categorical(const Eigen::ArrayXd& norm_weights, int count, RngStream& rng);

// log of the incremental importance weight for one theta-conditioned
// transition: log p(x|x_prev) + log p(y|x) - log q(x).
double smc_weight(const Ssm& model, const ParamDraw& theta, const Proposal& proposal, double x,
                  double x_prev, double y, int t);

// Marginalized counterpart: predictive weight under hp_prev, plus the updated
// hyperparameters for the extended path.
std::pair<double, HyperParams> smc_weight_marginal(const Ssm& model, const HyperParams& hp_prev,
                                                   const Proposal& proposal, double x,
                                                   double x_prev, double y, int t);

// Ancestor-sampling log weights for attaching the reference state x_ref at
// step t to each time-(t-1) particle. Theta-conditioned version.
Eigen::ArrayXd ancestor_logweights_std(const Ssm& model, const ParamDraw& theta, double x_ref,
                                       int t, const Eigen::VectorXd& states_prev,
                                       const Eigen::ArrayXd& log_norm_w_prev);

// Marginalized version: log w + log_base + log g(chi_{t-1}, nu_{t-1})
//                            - log g(chi_{t-1} + cross + tail, ...),
// where cross is the statistic of the splice transition and tail carries the
// reference suffix statistics s_{t+1:T}. NaN entries mark numerically invalid
// hyperparameters (caller falls back to a fresh fold); -inf marks dead
// ancestors.
Eigen::ArrayXd ancestor_logweights_marginal(const Ssm& model, double x_ref, double y_t, int t,
                                            const Eigen::MatrixXd& chi_prev,
                                            const Eigen::MatrixXd& nu_prev,
                                            const Eigen::ArrayXd& logg_prev,
                                            const Eigen::ArrayXd& log_norm_w_prev,
                                            const Eigen::VectorXd& states_prev,
                                            const SuffStat& tail);

// --- sweeps -------------------------------------------------------------------

ParticleSystem run_smc(const Ssm& model, const ParamsOrMarginal& params, const Eigen::VectorXd& y,
                       const SweepOptions& opts, RngStream rng);

struct CsmcResult {
  ParticleSystem system;
  ReferenceState reference;  // freshly drawn output trajectory
  int chosen = -1;
};

// Conditional sweep: the reference occupies the last particle slot and
// survives every resampling step; with ancestor_sampling its ancestry links
// are resampled from the ancestor weights above.
CsmcResult run_csmc(const Ssm& model, const ParamsOrMarginal& params, const Eigen::VectorXd& y,
                    const ReferenceState& ref, const SweepOptions& opts, RngStream rng);

}  // namespace margsmc
