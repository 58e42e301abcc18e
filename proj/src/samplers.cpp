#include "margsmc/samplers.hpp"

#include <cmath>
#include <stdexcept>

#include "margsmc/util.hpp"

namespace margsmc {

namespace {

HyperParams fold_trajectory(const Ssm& model, const HyperParams& prior,
                            const Eigen::VectorXd& traj, const Eigen::VectorXd& y) {
  HyperParams hp = prior;
  const int T = static_cast<int>(y.size());
  for (int t = 1; t <= T; ++t)
    hp = update_hyperparams(hp, model.suffstat(traj[t], traj[t - 1], y[t - 1], t));
  return hp;
}

Proposal default_proposal(bool marginal, const SamplerConfig& cfg) {
  if (cfg.proposal) return *cfg.proposal;
  return marginal ? Proposal::marginal_bootstrap() : Proposal::bootstrap();
}

ParamDraw initial_params(const Ssm& model, const SamplerConfig& cfg, RngStream rng) {
  if (cfg.init_params) {
    model.validate_params(*cfg.init_params);
    return *cfg.init_params;
  }
  return model.family().sample_posterior(model.prior_hyperparams(), rng);
}

// One unconditional sweep plus a trajectory draw; used to initialize chains.
ReferenceState bootstrap_reference(const Ssm& model, const ParamsOrMarginal& params,
                                   const Eigen::VectorXd& y, const SweepOptions& opts,
                                   RngStream rng) {
  ParticleSystem ps = run_smc(model, params, y, opts, rng.substream(0));
  RngStream pick = rng.substream(1);
  const int b = pick.categorical(ps.norm_weights);
  return make_reference(model, ps.trajectory(b), y);
}

Chain gibbs_loop(const Ssm& model, const SamplerConfig& cfg, const Eigen::VectorXd& y,
                 bool marginal, bool ancestor_sampling) {
  const int T = static_cast<int>(y.size());
  const int M = cfg.iterations;
  require(M >= 1, "run_sampler: iterations must be positive");
  const ConjugateFamily& fam = model.family();
  const HyperParams prior = model.prior_hyperparams();
  const RngStream root(cfg.seed, cfg.stream);

  SweepOptions opts;
  opts.num_particles = cfg.num_particles;
  opts.proposal = default_proposal(marginal, cfg);
  opts.ancestor_sampling = ancestor_sampling;
  opts.threads = cfg.threads;

  RngStream init = root.substream(0);
  ParamDraw theta = initial_params(model, cfg, init.substream(2));
  // Marginalized chains normally initialize with a sweep from the prior
  // hyperparameters. Explicit starting parameters switch the init sweep to a
  // theta-conditioned one; under a near-improper prior that is the only
  // workable start, since the prior predictive is too heavy-tailed to track
  // the data.
  ReferenceState ref;
  if (marginal && !cfg.init_params) {
    ref = bootstrap_reference(model, prior, y, opts, init);
  } else if (marginal) {
    SweepOptions init_opts = opts;
    init_opts.proposal = default_proposal(false, cfg);
    ref = bootstrap_reference(model, theta, y, init_opts, init);
  } else {
    ref = bootstrap_reference(model, theta, y, opts, init);
  }

  Chain chain;
  chain.params.resize(M, fam.param_dim());
  if (cfg.store_trajectories) chain.trajectories.resize(M, T + 1);
  chain.param_names = fam.param_names();

  for (int m = 0; m < M; ++m) {
    const RngStream iter = root.substream(m + 1);
    CsmcResult res =
        marginal ? run_csmc(model, prior, y, ref, opts, iter.substream(0))
                 : run_csmc(model, theta, y, ref, opts, iter.substream(0));
    ref = std::move(res.reference);

    HyperParams hp = prior;
    const SuffStat total = ref.total();
    hp.chi += total.s;
    hp.nu += total.r;
    RngStream ts = iter.substream(1);
    theta = fam.sample_posterior(hp, ts);

    chain.params.row(m) = theta;
    if (cfg.store_trajectories) chain.trajectories.row(m) = ref.trajectory.transpose();
  }
  return chain;
}

Chain blocked_loop(const Ssm& model, const SamplerConfig& cfg, const Eigen::VectorXd& y,
                   bool ancestor_sampling) {
  const int T = static_cast<int>(y.size());
  const int M = cfg.iterations;
  const int B = cfg.block_prefix, L = cfg.block_overlap;
  require(B >= 1, "run_sampler: blocked methods need block_prefix >= 1");
  require(L >= 0, "run_sampler: block_overlap must be nonnegative");
  require(B + L < T, "run_sampler: blocks must leave room, need block_prefix + block_overlap < T");
  require(M >= 1, "run_sampler: iterations must be positive");

  const ConjugateFamily& fam = model.family();
  const HyperParams prior = model.prior_hyperparams();
  const RngStream root(cfg.seed, cfg.stream);

  SweepOptions base;
  base.num_particles = cfg.num_particles;
  base.ancestor_sampling = ancestor_sampling;
  base.threads = cfg.threads;

  RngStream init = root.substream(0);
  ParamDraw theta = initial_params(model, cfg, init.substream(2));
  SweepOptions init_opts = base;
  init_opts.proposal = default_proposal(!cfg.init_params, cfg);
  Eigen::VectorXd traj =
      cfg.init_params ? bootstrap_reference(model, theta, y, init_opts, init).trajectory
                      : bootstrap_reference(model, prior, y, init_opts, init).trajectory;

  Chain chain;
  chain.params.resize(M, fam.param_dim());
  if (cfg.store_trajectories) chain.trajectories.resize(M, T + 1);
  chain.param_names = fam.param_names();

  const int split = B + L;  // first window covers x_{0:split}
  const Eigen::VectorXd y1 = y.head(split);
  const Eigen::VectorXd y2 = y.segment(B, T - B);

  for (int m = 0; m < M; ++m) {
    const RngStream iter = root.substream(m + 1);

    // First block: theta-conditioned cSMC on x_{0:B+L}, tied to the fixed
    // remainder through the transition density into x_{B+L+1}. Plain cSMC
    // here regardless of the method tag; ancestor sampling applies to the
    // marginalized second block only.
    {
      SweepOptions opts = base;
      opts.ancestor_sampling = false;
      opts.proposal = Proposal::bootstrap();
      const double x_next = traj[split + 1];
      const ParamDraw th = theta;
      opts.final_logfactor = [&model, x_next, split, th](double xl) {
        return model.log_transition(x_next, xl, split + 1, th);
      };
      const ReferenceState ref1 = make_reference(model, traj.head(split + 1), y1, 0);
      CsmcResult res = run_csmc(model, theta, y1, ref1, opts, iter.substream(0));
      traj.head(split + 1) = res.reference.trajectory;
    }

    // Second block: marginalized cSMC on x_{B:T} with the prefix folded into
    // the prior hyperparameters and x_B pinned.
    {
      HyperParams hp0 = prior;
      for (int t = 1; t <= B; ++t)
        hp0 = update_hyperparams(hp0, model.suffstat(traj[t], traj[t - 1], y[t - 1], t));
      SweepOptions opts = base;
      opts.proposal = default_proposal(true, cfg);
      opts.t_offset = B;
      opts.fixed_initial = traj[B];
      const ReferenceState ref2 = make_reference(model, traj.segment(B, T - B + 1), y2, B);
      CsmcResult res = run_csmc(model, hp0, y2, ref2, opts, iter.substream(1));
      traj.segment(B, T - B + 1) = res.reference.trajectory;
    }

    HyperParams hp = fold_trajectory(model, prior, traj, y);
    RngStream ts = iter.substream(2);
    theta = fam.sample_posterior(hp, ts);

    chain.params.row(m) = theta;
    if (cfg.store_trajectories) chain.trajectories.row(m) = traj.transpose();
  }
  return chain;
}

Chain mpmmh_loop(const Ssm& model, const SamplerConfig& cfg, const Eigen::VectorXd& y) {
  require(model.has_unmarginalized_param(),
          "run_sampler: mpmmh needs a model with an unmarginalized parameter");
  require(cfg.rw_var > 0.0, "run_sampler: rw_var must be positive");
  const int T = static_cast<int>(y.size());
  const int M = cfg.iterations;
  require(M >= 1, "run_sampler: iterations must be positive");
  const ConjugateFamily& fam = model.family();
  const HyperParams prior = model.prior_hyperparams();
  const Density c_prior = model.unmarginalized_prior();
  const RngStream root(cfg.seed, cfg.stream);

  SweepOptions opts;
  opts.num_particles = cfg.num_particles;
  opts.proposal = default_proposal(true, cfg);
  opts.threads = cfg.threads;

  // State draw from a finished sweep: trajectory index plus a parameter draw
  // from that particle's terminal hyperparameters.
  const auto draw_state = [&](const ParticleSystem& ps, RngStream rng, Eigen::VectorXd& traj,
                              ParamDraw& th) {
    const int b = rng.categorical(ps.norm_weights);
    traj = ps.trajectory(b);
    HyperParams hp;
    hp.chi = ps.chi.col(b);
    hp.nu = ps.nu.col(b);
    th = fam.sample_posterior(hp, rng);
  };

  double c = cfg.init_unmarginalized;
  std::unique_ptr<Ssm> bound = model.rebind_unmarginalized(c);
  RngStream init = root.substream(0);
  ParticleSystem ps = run_smc(*bound, prior, y, opts, init.substream(0));
  double log_z = ps.log_evidence();
  Eigen::VectorXd traj;
  ParamDraw theta;
  draw_state(ps, init.substream(1), traj, theta);

  Chain chain;
  chain.params.resize(M, fam.param_dim());
  chain.unmarginalized.resize(M);
  chain.accepted.assign(M, 0);
  chain.log_z.resize(M);
  if (cfg.store_trajectories) chain.trajectories.resize(M, T + 1);
  chain.param_names = fam.param_names();

  const double step_sd = std::sqrt(cfg.rw_var);
  for (int m = 0; m < M; ++m) {
    const RngStream iter = root.substream(m + 1);
    RngStream prop = iter.substream(1);
    const double c_new = c + step_sd * prop.normal();
    std::unique_ptr<Ssm> cand = model.rebind_unmarginalized(c_new);
    ParticleSystem ps_new = run_smc(*cand, prior, y, opts, iter.substream(0));
    const double log_z_new = ps_new.log_evidence();
    // Symmetric random walk: the proposal terms cancel.
    const double la = mpmmh_log_accept(log_z_new, c_prior.log_pdf(c_new), 0.0, log_z,
                                       c_prior.log_pdf(c), 0.0);
    RngStream acc = iter.substream(2);
    if (std::log(acc.uniform01()) < la) {
      c = c_new;
      log_z = log_z_new;
      draw_state(ps_new, iter.substream(3), traj, theta);
      chain.accepted[m] = 1;
    }
    chain.unmarginalized[m] = c;
    chain.log_z[m] = log_z;
    chain.params.row(m) = theta;
    if (cfg.store_trajectories) chain.trajectories.row(m) = traj.transpose();
  }
  return chain;
}

Chain mis_loop(const Ssm& model, const SamplerConfig& cfg, const Eigen::VectorXd& y) {
  const int T = static_cast<int>(y.size());
  const int M = cfg.iterations;  // independent runs
  const int N = cfg.num_particles;
  require(M >= 1, "run_sampler: iterations must be positive");
  const ConjugateFamily& fam = model.family();
  const HyperParams prior = model.prior_hyperparams();
  const RngStream root(cfg.seed, cfg.stream);

  SweepOptions opts;
  opts.num_particles = N;
  opts.proposal = default_proposal(true, cfg);
  opts.threads = cfg.threads;

  Chain chain;
  chain.params.resize(static_cast<Eigen::Index>(M) * N, fam.param_dim());
  chain.weights.resize(static_cast<Eigen::Index>(M) * N);
  chain.log_z.resize(M);
  chain.run_means.resize(M, T + 1);
  chain.param_names = fam.param_names();

  for (int m = 0; m < M; ++m) {
    const RngStream iter = root.substream(m + 1);
    ParticleSystem ps = run_smc(model, prior, y, opts, iter.substream(0));
    chain.log_z[m] = ps.log_evidence();

    // Weighted state means via one backward pass over the genealogy.
    Eigen::VectorXi idx(N);
    for (int i = 0; i < N; ++i) idx[i] = i;
    for (int t = T; t >= 0; --t) {
      double acc = 0.0;
      for (int i = 0; i < N; ++i) acc += ps.norm_weights[i] * ps.states(t, idx[i]);
      chain.run_means(m, t) = acc;
      if (t >= 1)
        for (int i = 0; i < N; ++i) idx[i] = ps.ancestors(t - 1, idx[i]);
    }

    RngStream ts = iter.substream(1);
    for (int i = 0; i < N; ++i) {
      HyperParams hp;
      hp.chi = ps.chi.col(i);
      hp.nu = ps.nu.col(i);
      chain.params.row(static_cast<Eigen::Index>(m) * N + i) = fam.sample_posterior(hp, ts);
      chain.weights[static_cast<Eigen::Index>(m) * N + i] = ps.norm_weights[i];
    }
  }

  // Pool: record weight = normalized Z_m * within-run weight.
  Eigen::ArrayXd logz = chain.log_z.array();
  const double mz = logz.maxCoeff();
  Eigen::ArrayXd zw = (logz - mz).exp();
  zw /= zw.sum();
  for (int m = 0; m < M; ++m)
    chain.weights.segment(static_cast<Eigen::Index>(m) * N, N) *= zw[m];
  chain.weights /= chain.weights.sum();
  return chain;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "pg") return Method::pg;
  if (name == "pgas") return Method::pgas;
  if (name == "mpg") return Method::mpg;
  if (name == "mpgas") return Method::mpgas;
  if (name == "blocked-mpg") return Method::blocked_mpg;
  if (name == "blocked-mpgas") return Method::blocked_mpgas;
  if (name == "mpmmh") return Method::mpmmh;
  if (name == "mis") return Method::mis;
  throw std::invalid_argument("unknown sampler method `" + name +
                              "` (valid: pg, pgas, mpg, mpgas, blocked-mpg, blocked-mpgas, "
                              "mpmmh, mis)");
}

std::string method_to_string(Method m) {
  switch (m) {
    case Method::pg: return "pg";
    case Method::pgas: return "pgas";
    case Method::mpg: return "mpg";
    case Method::mpgas: return "mpgas";
    case Method::blocked_mpg: return "blocked-mpg";
    case Method::blocked_mpgas: return "blocked-mpgas";
    case Method::mpmmh: return "mpmmh";
    case Method::mis: return "mis";
  }
  throw std::logic_error("unknown method");
}

double mpmmh_log_accept(double log_z_new, double log_prior_new, double log_q_reverse,
                        double log_z_old, double log_prior_old, double log_q_forward) {
  return (log_z_new + log_prior_new + log_q_reverse) -
         (log_z_old + log_prior_old + log_q_forward);
}

Chain run_sampler(const Ssm& model, const SamplerConfig& config, const Eigen::VectorXd& y) {
  require(y.size() >= 1, "run_sampler: need observations");
  require(config.num_particles >= 1, "run_sampler: num_particles must be positive");
  switch (config.method) {
    case Method::pg: return gibbs_loop(model, config, y, false, false);
    case Method::pgas: return gibbs_loop(model, config, y, false, true);
    case Method::mpg: return gibbs_loop(model, config, y, true, false);
    case Method::mpgas: return gibbs_loop(model, config, y, true, true);
    case Method::blocked_mpg: return blocked_loop(model, config, y, false);
    case Method::blocked_mpgas: return blocked_loop(model, config, y, true);
    case Method::mpmmh: return mpmmh_loop(model, config, y);
    case Method::mis: return mis_loop(model, config, y);
  }
  throw std::logic_error("unknown method");
}

Chain run_pg(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  config.method = Method::pg;
  return run_sampler(model, config, y);
}
Chain run_pgas(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  config.method = Method::pgas;
  return run_sampler(model, config, y);
}
Chain run_mpg(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  config.method = Method::mpg;
  return run_sampler(model, config, y);
}
Chain run_mpgas(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  config.method = Method::mpgas;
  return run_sampler(model, config, y);
}
Chain run_blocked(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  if (config.method != Method::blocked_mpg) config.method = Method::blocked_mpgas;
  return run_sampler(model, config, y);
}
Chain run_mpmmh(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  config.method = Method::mpmmh;
  return run_sampler(model, config, y);
}
Chain run_mis(const Ssm& model, SamplerConfig config, const Eigen::VectorXd& y) {
  config.method = Method::mis;
  return run_sampler(model, config, y);
}

}  // namespace margsmc
