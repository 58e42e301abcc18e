#include "margsmc/smc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "margsmc/util.hpp"

namespace margsmc {

namespace {

using ChannelLayout = ConjugateFamily::ChannelLayout;

bool touches_channel(const SuffStat& st, const ChannelLayout& l) {
  for (int k = 0; k < l.chi_len; ++k)
    if (st.s[l.chi_off + k] != 0.0) return true;
  for (int k = 0; k < l.nu_len; ++k)
    if (st.r[l.nu_off + k] != 0.0) return true;
  return false;
}

template <class F>
void parallel_for(int n, int threads, F&& f) {
  if (threads <= 1 || n < 256) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  const int nt = std::min<int>(threads, std::max(1, n / 64));
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const int chunk = (n + nt - 1) / nt;
  for (int w = 0; w < nt; ++w) {
    const int lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &f] {
      for (int i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

// One marginalized transition on raw hyperparameter columns. Writes the
// updated chi/nu and per-channel normalizers; a dead outcome (off-support
// step, nonfinite state, numerically invalid update) copies the parent's
// columns and returns -inf.
struct MarginalStep {
  const Ssm& model;
  const ConjugateFamily& fam;
  const std::vector<ChannelLayout>& layouts;
  const Proposal& proposal;
  int nchi, nnu, nch;

  double operator()(const double* chi_p, const double* nu_p, const double* logg_p,
                    double logg_total_p, double x, double x_prev, double yt, int t, double* chi_o,
                    double* nu_o, double* logg_o, double* logg_total_o) const {
    const auto dead = [&] {
      std::copy(chi_p, chi_p + nchi, chi_o);
      std::copy(nu_p, nu_p + nnu, nu_o);
      std::copy(logg_p, logg_p + nch, logg_o);
      *logg_total_o = logg_total_p;
      return neg_inf;
    };
    if (!std::isfinite(x)) return dead();
    const double lb_full = model.log_base(x, x_prev, yt, t);
    if (!(lb_full > neg_inf)) return dead();
    const SuffStat full = model.suffstat(x, x_prev, yt, t);

    for (int k = 0; k < nchi; ++k) chi_o[k] = chi_p[k] + full.s[k];
    for (int k = 0; k < nnu; ++k) nu_o[k] = nu_p[k] + full.r[k];
    double total_full = 0.0;
    for (int c = 0; c < nch; ++c) {
      const ChannelLayout& l = layouts[c];
      logg_o[c] = touches_channel(full, l)
                      ? fam.log_g_channel(c, chi_o + l.chi_off, nu_o + l.nu_off)
                      : logg_p[c];
      total_full += logg_o[c];
    }
    if (std::isnan(total_full)) return dead();
    const double pred_full = lb_full + logg_total_p - total_full;

    double logq;
    if (proposal.kind == Proposal::Kind::marginal_bootstrap) {
      // The proposal is the transition predictive, so the weight reduces to
      // the predictive of the remaining (observation) channels.
      const SuffStat tr = model.suffstat_transition(x, x_prev, t);
      const double lb_tr = model.log_base_transition(x, x_prev, t);
      SVec tchi(nchi), tnu(nnu);
      for (int k = 0; k < nchi; ++k) tchi[k] = chi_p[k] + tr.s[k];
      for (int k = 0; k < nnu; ++k) tnu[k] = nu_p[k] + tr.r[k];
      double total_tr = 0.0;
      for (int c = 0; c < nch; ++c) {
        const ChannelLayout& l = layouts[c];
        total_tr += touches_channel(tr, l)
                        ? fam.log_g_channel(c, tchi.data() + l.chi_off, tnu.data() + l.nu_off)
                        : logg_p[c];
      }
      logq = lb_tr + logg_total_p - total_tr;
    } else {
      HyperParams hp;
      hp.chi = Eigen::Map<const Eigen::VectorXd>(chi_p, nchi);
      hp.nu = Eigen::Map<const Eigen::VectorXd>(nu_p, nnu);
      logq = proposal.factory(t, x_prev, &hp).log_pdf(x);
    }
    const double w = pred_full - logq;
    if (!std::isfinite(w)) return dead();
    *logg_total_o = total_full;
    return w;
  }
};

// Fresh hyperparameter fold along the ancestral lineage of particle i at time
// upto; fallback for cancellation-damaged running updates.
void refold_lineage(const Ssm& model, const ConjugateFamily& fam,
                    const std::vector<ChannelLayout>& layouts, const HyperParams& prior,
                    const Eigen::MatrixXd& states, const Eigen::MatrixXi& ancestors,
                    const Eigen::VectorXd& y, int upto, int i, int t_offset, double* chi,
                    double* nu, double* logg, double* logg_total) {
  std::vector<int> idx(upto + 1);
  idx[upto] = i;
  for (int s = upto; s >= 1; --s) idx[s - 1] = ancestors(s - 1, idx[s]);
  HyperParams hp = prior;
  for (int s = 1; s <= upto; ++s) {
    const SuffStat st =
        model.suffstat(states(s, idx[s]), states(s - 1, idx[s - 1]), y[s - 1], t_offset + s);
    hp = update_hyperparams(hp, st);
  }
  const int nchi = fam.chi_dim(), nnu = fam.nu_dim();
  std::copy(hp.chi.data(), hp.chi.data() + nchi, chi);
  std::copy(hp.nu.data(), hp.nu.data() + nnu, nu);
  double total = 0.0;
  for (size_t c = 0; c < layouts.size(); ++c) {
    const ChannelLayout& l = layouts[c];
    logg[c] = fam.log_g_channel(static_cast<int>(c), chi + l.chi_off, nu + l.nu_off);
    total += logg[c];
  }
  *logg_total = total;
}

}  // namespace

// --- small public pieces -------------------------------------------------------

Eigen::VectorXd ParticleSystem::trajectory(int i) const {
  const int T = num_steps();
  Eigen::VectorXd out(T + 1);
  int j = i;
  out[T] = states(T, j);
  for (int t = T; t >= 1; --t) {
    j = ancestors(t - 1, j);
    out[t - 1] = states(t - 1, j);
  }
  return out;
}

SuffStat ReferenceState::total() const {
  require(!step_stats.empty(), "ReferenceState: empty");
  SuffStat acc = step_stats[0];
  for (size_t k = 1; k < step_stats.size(); ++k) {
    acc.s += step_stats[k].s;
    acc.r += step_stats[k].r;
  }
  return acc;
}

ReferenceState make_reference(const Ssm& model, const Eigen::VectorXd& trajectory,
                              const Eigen::VectorXd& y, int t_offset) {
  const int T = static_cast<int>(y.size());
  require(trajectory.size() == T + 1, "make_reference: trajectory must have one more entry than y");
  ReferenceState ref;
  ref.trajectory = trajectory;
  ref.t_offset = t_offset;
  ref.step_stats.reserve(T);
  for (int t = 1; t <= T; ++t)
    ref.step_stats.push_back(
        model.suffstat(trajectory[t], trajectory[t - 1], y[t - 1], t_offset + t));
  return ref;
}

StatTail::StatTail(const std::vector<SuffStat>& steps) {
  require(!steps.empty(), "StatTail: need at least one step");
  tail_ = steps[0];
  for (size_t k = 1; k < steps.size(); ++k) {
    tail_.s += steps[k].s;
    tail_.r += steps[k].r;
  }
}

void StatTail::pop_front(const SuffStat& leading) {
  tail_.s -= leading.s;
  tail_.r -= leading.r;
}

Eigen::ArrayXi resample_categorical(const Eigen::ArrayXd& norm_weights, int count,
                                    RngStream& rng) {
  const int n = static_cast<int>(norm_weights.size());
  require(n > 0, "resample_categorical: empty weights");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(norm_weights[i]) || norm_weights[i] < 0.0)
      throw std::invalid_argument("resample_categorical: weights must be finite and nonnegative");
    total += norm_weights[i];
  }
  if (!(std::abs(total - 1.0) <= 1e-6))
    throw std::invalid_argument("resample_categorical: weights must be normalized");
  Eigen::ArrayXd cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += norm_weights[i];
    cum[i] = acc;
  }
  Eigen::ArrayXi out(count);
  for (int k = 0; k < count; ++k) {
    const double u = rng.uniform01() * total;
    const double* first = cum.data();
    const double* it = std::lower_bound(first, first + n, u);
    out[k] = static_cast<int>(std::min<std::ptrdiff_t>(it - first, n - 1));
  }
  return out;
}

double smc_weight(const Ssm& model, const ParamDraw& theta, const Proposal& proposal, double x,
                  double x_prev, double y, int t) {
  require(proposal.kind != Proposal::Kind::marginal_bootstrap,
          "smc_weight: marginal proposal requires a marginalized sweep");
  if (!std::isfinite(x)) return neg_inf;
  double w;
  if (proposal.kind == Proposal::Kind::bootstrap) {
    w = model.log_observation(y, x, t, theta);
  } else {
    const double lq = proposal.factory(t, x_prev, nullptr).log_pdf(x);
    w = model.log_transition(x, x_prev, t, theta) + model.log_observation(y, x, t, theta) - lq;
  }
  return std::isnan(w) ? neg_inf : w;
}

std::pair<double, HyperParams> smc_weight_marginal(const Ssm& model, const HyperParams& hp_prev,
                                                   const Proposal& proposal, double x,
                                                   double x_prev, double y, int t) {
  require(proposal.kind != Proposal::Kind::bootstrap,
          "smc_weight_marginal: theta-conditioned proposal in a marginalized sweep");
  const ConjugateFamily& fam = model.family();
  require(fam.valid(hp_prev), "smc_weight_marginal: invalid hyperparameters");
  std::vector<ChannelLayout> layouts(fam.num_channels());
  for (int c = 0; c < fam.num_channels(); ++c) layouts[c] = fam.channel(c);
  Eigen::ArrayXd logg(fam.num_channels());
  double logg_total = 0.0;
  for (int c = 0; c < fam.num_channels(); ++c) {
    const ChannelLayout& l = layouts[c];
    logg[c] = fam.log_g_channel(c, hp_prev.chi.data() + l.chi_off, hp_prev.nu.data() + l.nu_off);
    logg_total += logg[c];
  }
  MarginalStep step{model, fam, layouts, proposal, fam.chi_dim(), fam.nu_dim(),
                    fam.num_channels()};
  HyperParams out;
  out.chi.resize(fam.chi_dim());
  out.nu.resize(fam.nu_dim());
  Eigen::ArrayXd logg_o(fam.num_channels());
  double total_o = 0.0;
  const double w = step(hp_prev.chi.data(), hp_prev.nu.data(), logg.data(), logg_total, x, x_prev,
                        y, t, out.chi.data(), out.nu.data(), logg_o.data(), &total_o);
  return {w, out};
}

Eigen::ArrayXd ancestor_logweights_std(const Ssm& model, const ParamDraw& theta, double x_ref,
                                       int t, const Eigen::VectorXd& states_prev,
                                       const Eigen::ArrayXd& log_norm_w_prev) {
  const int n = static_cast<int>(states_prev.size());
  Eigen::ArrayXd out(n);
  for (int i = 0; i < n; ++i) {
    if (log_norm_w_prev[i] == neg_inf) {
      out[i] = neg_inf;
      continue;
    }
    out[i] = log_norm_w_prev[i] + model.log_transition(x_ref, states_prev[i], t, theta);
  }
  return out;
}

Eigen::ArrayXd ancestor_logweights_marginal(const Ssm& model, double x_ref, double y_t, int t,
                                            const Eigen::MatrixXd& chi_prev,
                                            const Eigen::MatrixXd& nu_prev,
                                            const Eigen::ArrayXd& logg_prev,
                                            const Eigen::ArrayXd& log_norm_w_prev,
                                            const Eigen::VectorXd& states_prev,
                                            const SuffStat& tail) {
  const ConjugateFamily& fam = model.family();
  const int n = static_cast<int>(states_prev.size());
  const int nchi = fam.chi_dim(), nnu = fam.nu_dim();
  Eigen::ArrayXd out(n);
  SVec chi_t(nchi), nu_t(nnu);
  for (int i = 0; i < n; ++i) {
    if (log_norm_w_prev[i] == neg_inf) {
      out[i] = neg_inf;
      continue;
    }
    const double lb = model.log_base(x_ref, states_prev[i], y_t, t);
    if (!(lb > neg_inf)) {
      out[i] = neg_inf;
      continue;
    }
    const SuffStat cross = model.suffstat(x_ref, states_prev[i], y_t, t);
    for (int k = 0; k < nchi; ++k) chi_t[k] = chi_prev(k, i) + cross.s[k] + tail.s[k];
    for (int k = 0; k < nnu; ++k) nu_t[k] = nu_prev(k, i) + cross.r[k] + tail.r[k];
    const double lg_t = fam.log_g_raw(chi_t.data(), nu_t.data());
    // NaN (invalid chi_T) propagates so the caller can refold the lineage.
    out[i] = log_norm_w_prev[i] + lb + logg_prev[i] - lg_t;
  }
  return out;
}

// --- the sweep -------------------------------------------------------------------

namespace {

ParticleSystem run_sweep(const Ssm& model, const ParamsOrMarginal& params,
                         const Eigen::VectorXd& y, const SweepOptions& opts,
                         const ReferenceState* ref, RngStream& rng) {
  const int T = static_cast<int>(y.size());
  const int N = opts.num_particles;
  require(T >= 1, "run_smc: need at least one observation");
  require(N >= 1, "run_smc: need at least one particle");
  const bool marginal = std::holds_alternative<HyperParams>(params);
  const bool conditional = ref != nullptr;
  const bool as_active = conditional && opts.ancestor_sampling;

  const ConjugateFamily& fam = model.family();
  ParamDraw theta;
  HyperParams prior;
  if (marginal) {
    prior = std::get<HyperParams>(params);
    require(fam.valid(prior), "run_smc: invalid prior hyperparameters");
    require(opts.proposal.kind != Proposal::Kind::bootstrap,
            "run_smc: marginalized sweeps need a marginal or custom proposal");
  } else {
    theta = std::get<ParamDraw>(params);
    model.validate_params(theta);
    require(opts.proposal.kind != Proposal::Kind::marginal_bootstrap,
            "run_smc: marginal proposal requires a marginalized sweep");
  }
  if (conditional) {
    require(ref->trajectory.size() == T + 1, "run_csmc: reference length mismatch");
    require(static_cast<int>(ref->step_stats.size()) == T || !marginal,
            "run_csmc: reference statistics missing");
    require(ref->t_offset == opts.t_offset, "run_csmc: reference window mismatch");
    if (opts.fixed_initial)
      require(ref->trajectory[0] == *opts.fixed_initial,
              "run_csmc: reference does not start at the pinned initial state");
  }

  ParticleSystem ps;
  ps.states.resize(T + 1, N);
  ps.ancestors.resize(T, N);
  ps.logz_steps = Eigen::VectorXd::Zero(T + 1);
  ps.t_offset = opts.t_offset;

  const int nchi = fam.chi_dim(), nnu = fam.nu_dim(), nch = fam.num_channels();
  std::vector<ChannelLayout> layouts(nch);
  for (int c = 0; c < nch; ++c) layouts[c] = fam.channel(c);

  // Double-buffered per-particle hyperparameters (marginal sweeps only).
  Eigen::MatrixXd chi_buf[2], nu_buf[2], logg_buf[2];
  Eigen::ArrayXd logg_total_buf[2];
  if (marginal) {
    for (int b = 0; b < 2; ++b) {
      chi_buf[b].resize(nchi, N);
      nu_buf[b].resize(nnu, N);
      logg_buf[b].resize(nch, N);
      logg_total_buf[b].resize(N);
    }
  }

  // Initial slot.
  RngStream init_stream = rng.substream(0);
  for (int i = 0; i < N; ++i) {
    double x0;
    if (opts.fixed_initial)
      x0 = *opts.fixed_initial;
    else if (conditional && i == N - 1)
      x0 = ref->trajectory[0];
    else {
      RngStream si = init_stream.substream(i);
      x0 = model.sample_initial(si);
    }
    ps.states(0, i) = x0;
  }
  Eigen::ArrayXd logw = Eigen::ArrayXd::Zero(N);
  Eigen::ArrayXd lognormw = Eigen::ArrayXd::Constant(N, -std::log(static_cast<double>(N)));
  Eigen::ArrayXd normw = Eigen::ArrayXd::Constant(N, 1.0 / N);
  if (marginal) {
    Eigen::ArrayXd lg0(nch);
    double lg0_total = 0.0;
    for (int c = 0; c < nch; ++c) {
      const ChannelLayout& l = layouts[c];
      lg0[c] = fam.log_g_channel(c, prior.chi.data() + l.chi_off, prior.nu.data() + l.nu_off);
      lg0_total += lg0[c];
    }
    for (int i = 0; i < N; ++i) {
      chi_buf[0].col(i) = prior.chi;
      nu_buf[0].col(i) = prior.nu;
      logg_buf[0].col(i) = lg0.matrix();
    }
    logg_total_buf[0].setConstant(lg0_total);
  }

  std::optional<StatTail> tail;
  if (as_active && marginal) tail.emplace(ref->step_stats);

  MarginalStep mstep{model, fam, layouts, opts.proposal, nchi, nnu, nch};

  int prev = 0, cur = 1;
  for (int t = 1; t <= T; ++t) {
    const double yt = y[t - 1];
    const int mt = opts.t_offset + t;

    // Ancestor for the reference slot.
    int a_ref = N - 1;
    if (as_active) {
      const Eigen::VectorXd states_prev = ps.states.row(t - 1).transpose();
      Eigen::ArrayXd asw;
      if (marginal) {
        tail->pop_front(ref->step_stats[t - 1]);
        asw = ancestor_logweights_marginal(model, ref->trajectory[t], yt, mt, chi_buf[prev],
                                           nu_buf[prev], logg_total_buf[prev], lognormw,
                                           states_prev, tail->current());
        for (int i = 0; i < N; ++i) {
          if (!std::isnan(asw[i])) continue;
          // Running update lost too much precision; refold this lineage.
          refold_lineage(model, fam, layouts, prior, ps.states, ps.ancestors, y, t - 1, i,
                         opts.t_offset, chi_buf[prev].col(i).data(), nu_buf[prev].col(i).data(),
                         logg_buf[prev].col(i).data(), &logg_total_buf[prev][i]);
          Eigen::ArrayXd one = ancestor_logweights_marginal(
              model, ref->trajectory[t], yt, mt, chi_buf[prev].middleCols(i, 1),
              nu_buf[prev].middleCols(i, 1), logg_total_buf[prev].segment(i, 1),
              lognormw.segment(i, 1), states_prev.segment(i, 1), tail->current());
          asw[i] = one[0];
          if (std::isnan(asw[i]))
            throw std::runtime_error("run_csmc: ancestor weights numerically invalid at step t=" +
                                     std::to_string(mt));
        }
      } else {
        asw = ancestor_logweights_std(model, theta, ref->trajectory[t], mt, states_prev, lognormw);
      }
      const double m = asw.maxCoeff();
      if (!(m > neg_inf))
        throw std::runtime_error("run_csmc: ancestor weights collapsed at step t=" +
                                 std::to_string(mt));
      Eigen::ArrayXd asp = (asw - m).exp();
      a_ref = rng.categorical(asp);
    }

    // Multinomial resampling for the free slots.
    const int free_slots = conditional ? N - 1 : N;
    if (free_slots > 0) {
      const Eigen::ArrayXi anc = resample_categorical(normw, free_slots, rng);
      for (int i = 0; i < free_slots; ++i) ps.ancestors(t - 1, i) = anc[i];
    }
    if (conditional) ps.ancestors(t - 1, N - 1) = a_ref;

    // Propagate and weight.
    RngStream step_stream = rng.substream(t);
    const auto body = [&](int i) {
      const int parent = ps.ancestors(t - 1, i);
      const double xp = ps.states(t - 1, parent);
      double x;
      if (conditional && i == N - 1) {
        x = ref->trajectory[t];
      } else {
        RngStream si = step_stream.substream(i);
        if (marginal) {
          if (opts.proposal.kind == Proposal::Kind::marginal_bootstrap) {
            HyperParams hp;
            hp.chi = chi_buf[prev].col(parent);
            hp.nu = nu_buf[prev].col(parent);
            x = model.sample_marginal_transition(xp, mt, hp, si);
          } else {
            HyperParams hp;
            hp.chi = chi_buf[prev].col(parent);
            hp.nu = nu_buf[prev].col(parent);
            x = opts.proposal.factory(mt, xp, &hp).sample_scalar(si);
          }
        } else {
          if (opts.proposal.kind == Proposal::Kind::bootstrap)
            x = model.sample_transition(xp, mt, theta, si);
          else
            x = opts.proposal.factory(mt, xp, nullptr).sample_scalar(si);
        }
      }
      ps.states(t, i) = x;
      double w;
      if (marginal) {
        w = mstep(chi_buf[prev].col(parent).data(), nu_buf[prev].col(parent).data(),
                  logg_buf[prev].col(parent).data(), logg_total_buf[prev][parent], x, xp, yt, mt,
                  chi_buf[cur].col(i).data(), nu_buf[cur].col(i).data(),
                  logg_buf[cur].col(i).data(), &logg_total_buf[cur][i]);
      } else {
        w = smc_weight(model, theta, opts.proposal, x, xp, yt, mt);
      }
      if (opts.final_logfactor && t == T) {
        w += opts.final_logfactor(x);
        if (std::isnan(w)) w = neg_inf;
      }
      logw[i] = w;
    };
    parallel_for(N, opts.threads, body);

    const double m = logw.maxCoeff();
    if (!(m > neg_inf))
      throw std::runtime_error("run_smc: particle weights collapsed at step t=" +
                               std::to_string(mt));
    const double lse = m + std::log((logw - m).exp().sum());
    lognormw = logw - lse;
    normw = lognormw.exp();
    ps.logz_steps[t] = lse - std::log(static_cast<double>(N));
    std::swap(prev, cur);
  }

  ps.log_weights = logw;
  ps.norm_weights = normw;
  if (marginal) {
    ps.chi = chi_buf[prev];
    ps.nu = nu_buf[prev];
  }
  return ps;
}

}  // namespace

ParticleSystem run_smc(const Ssm& model, const ParamsOrMarginal& params, const Eigen::VectorXd& y,
                       const SweepOptions& opts, RngStream rng) {
  return run_sweep(model, params, y, opts, nullptr, rng);
}

CsmcResult run_csmc(const Ssm& model, const ParamsOrMarginal& params, const Eigen::VectorXd& y,
                    const ReferenceState& ref, const SweepOptions& opts, RngStream rng) {
  CsmcResult out;
  out.system = run_sweep(model, params, y, opts, &ref, rng);
  out.chosen = rng.categorical(out.system.norm_weights);
  out.reference =
      make_reference(model, out.system.trajectory(out.chosen), y, opts.t_offset);
  return out;
}

}  // namespace margsmc
