#include "margsmc/conjugacy.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace margsmc {

ConjugateFamily::ChannelLayout ConjugateFamily::channel(int c) const {
  if (c != 0) throw std::out_of_range("ConjugateFamily: channel index");
  return {0, chi_dim(), 0, nu_dim()};
}

double ConjugateFamily::log_g(const HyperParams& hp) const {
  if (hp.chi.size() != chi_dim() || hp.nu.size() != nu_dim())
    throw std::invalid_argument("log_g: hyperparameter dimensions do not match family");
  double total = 0.0;
  for (int c = 0; c < num_channels(); ++c) {
    const ChannelLayout l = channel(c);
    total += log_g_channel(c, hp.chi.data() + l.chi_off, hp.nu.data() + l.nu_off);
  }
  return total;
}

Density ConjugateFamily::posterior_density(const HyperParams&) const {
  throw std::logic_error("ConjugateFamily: no closed-form posterior density for this family");
}

// --- IgVariance -------------------------------------------------------------

HyperParams IgVariance::prior(double alpha, double beta) {
  require(alpha > 0.0 && std::isfinite(alpha), "IgVariance: alpha must be positive");
  require(beta > 0.0 && std::isfinite(beta), "IgVariance: beta must be positive");
  HyperParams hp;
  hp.chi = SVec::Constant(1, beta);
  hp.nu = SVec::Constant(1, alpha + 1.0);
  return hp;
}

SuffStat IgVariance::residual_stat(double residual) {
  SuffStat st;
  st.s = SVec::Constant(1, 0.5 * residual * residual);
  st.r = SVec::Constant(1, 0.5);
  return st;
}

bool IgVariance::valid(const HyperParams& hp) const {
  if (hp.chi.size() != 1 || hp.nu.size() != 1) return false;
  const double alpha = hp.nu[0] - 1.0, beta = hp.chi[0];
  return std::isfinite(alpha) && std::isfinite(beta) && alpha > 0.0 && beta > 0.0;
}

double IgVariance::log_g_channel(int, const double* chi, const double* nu) const {
  const double alpha = nu[0] - 1.0;
  return alpha * std::log(chi[0]) - lgamma_cached(alpha);
}

double IgVariance::natural_dot(const ParamDraw& theta, const SuffStat& st) const {
  const double var = theta[0];
  return -st.s[0] / var - std::log(var) * st.r[0];
}

ParamDraw IgVariance::sample_posterior(const HyperParams& hp, RngStream& rng) const {
  require(valid(hp), "IgVariance: invalid hyperparameters");
  ParamDraw out(1);
  out[0] = rng.inverse_gamma(hp.nu[0] - 1.0, hp.chi[0]);
  return out;
}

Density IgVariance::posterior_density(const HyperParams& hp) const {
  require(valid(hp), "IgVariance: invalid hyperparameters");
  return Density::inverse_gamma(hp.nu[0] - 1.0, hp.chi[0]);
}

// --- NigRegression ----------------------------------------------------------

NigRegression::NigRegression(int d) : d_(d) {
  require(d >= 1, "NigRegression: d must be at least 1");
  require(d * d + 1 <= max_stat_dim, "NigRegression: d exceeds the compiled statistic size");
}

HyperParams NigRegression::prior(const Eigen::VectorXd& mu, const Eigen::MatrixXd& lambda,
                                 double alpha, double beta) {
  const int d = static_cast<int>(mu.size());
  require(lambda.rows() == d && lambda.cols() == d, "NigRegression: lambda must be d x d");
  require(alpha > 0.0 && beta > 0.0, "NigRegression: alpha and beta must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  require(llt.info() == Eigen::Success, "NigRegression: lambda must be positive definite");
  HyperParams hp;
  hp.chi.resize(d + 1);
  hp.chi.head(d) = lambda * mu;
  hp.chi[d] = -(beta + 0.5 * mu.dot(lambda * mu));
  hp.nu.resize(d * d + 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) hp.nu[i * d + j] = 0.5 * lambda(i, j);
  hp.nu[d * d] = alpha + 0.5 * d + 1.0;
  return hp;
}

SuffStat NigRegression::data_stat(double z, const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  SuffStat st;
  st.s.resize(d + 1);
  st.s.head(d) = z * u;
  st.s[d] = -0.5 * z * z;
  st.r.resize(d * d + 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) st.r[i * d + j] = 0.5 * u[i] * u[j];
  st.r[d * d] = 0.5;
  return st;
}

NigRegression::Decoded NigRegression::decode(const HyperParams& hp) const {
  Decoded out;
  out.lambda.resize(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) out.lambda(i, j) = 2.0 * hp.nu[i * d_ + j];
  const Eigen::VectorXd chib = hp.chi.head(d_);
  out.mu = out.lambda.ldlt().solve(chib);
  out.alpha = hp.nu[d_ * d_] - 0.5 * d_ - 1.0;
  out.beta = -hp.chi[d_] - 0.5 * chib.dot(out.mu);
  return out;
}

bool NigRegression::valid(const HyperParams& hp) const {
  if (hp.chi.size() != d_ + 1 || hp.nu.size() != d_ * d_ + 1) return false;
  if (!hp.chi.allFinite() || !hp.nu.allFinite()) return false;
  const Decoded dec = decode(hp);
  if (!(dec.alpha > 0.0) || !(dec.beta > 0.0) || !std::isfinite(dec.beta)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(dec.lambda);
  return llt.info() == Eigen::Success;
}

double NigRegression::log_g_channel(int, const double* chi, const double* nu) const {
  // log g = alpha log beta - lgamma(alpha) + log det(Lambda) / 2 - d log(2 pi) / 2
  const double alpha = nu[d_ * d_] - 0.5 * d_ - 1.0;
  double logdet, quad;  // quad = chi_b' Lambda^-1 chi_b
  if (d_ == 1) {
    const double lam = 2.0 * nu[0];
    logdet = std::log(lam);
    quad = chi[0] * chi[0] / lam;
  } else if (d_ == 2) {
    const double l00 = 2.0 * nu[0], l01 = 2.0 * nu[1], l11 = 2.0 * nu[3];
    const double det = l00 * l11 - l01 * l01;
    logdet = std::log(det);
    quad = (l11 * chi[0] * chi[0] - 2.0 * l01 * chi[0] * chi[1] + l00 * chi[1] * chi[1]) / det;
  } else {
    Eigen::MatrixXd lam(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) lam(i, j) = 2.0 * nu[i * d_ + j];
    Eigen::Map<const Eigen::VectorXd> chib(chi, d_);
    Eigen::LLT<Eigen::MatrixXd> llt(lam);
    logdet = 2.0 * std::log(llt.matrixL().determinant());
    quad = chib.dot(llt.solve(chib));
  }
  const double beta = -chi[d_] - 0.5 * quad;
  return alpha * std::log(beta) - lgamma_cached(alpha) + 0.5 * logdet - 0.5 * d_ * log_2pi;
}

double NigRegression::natural_dot(const ParamDraw& theta, const SuffStat& st) const {
  const Eigen::VectorXd b = theta.head(d_);
  const double var = theta[d_];
  double dot_s = 0.0;
  for (int i = 0; i < d_; ++i) dot_s += b[i] * st.s[i];
  dot_s += st.s[d_];
  double dot_r = 0.0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) dot_r += b[i] * b[j] * st.r[i * d_ + j];
  return dot_s / var - dot_r / var - std::log(var) * st.r[d_ * d_];
}

ParamDraw NigRegression::sample_posterior(const HyperParams& hp, RngStream& rng) const {
  require(valid(hp), "NigRegression: invalid hyperparameters");
  const Decoded dec = decode(hp);
  const double var = rng.inverse_gamma(dec.alpha, dec.beta);
  const Eigen::MatrixXd cov =
      var * dec.lambda.llt().solve(Eigen::MatrixXd::Identity(d_, d_));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd z(d_);
  for (int i = 0; i < d_; ++i) z[i] = rng.normal();
  ParamDraw out(d_ + 1);
  out.head(d_) = dec.mu + llt.matrixL() * z;
  out[d_] = var;
  return out;
}

Density NigRegression::posterior_density(const HyperParams& hp) const {
  require(valid(hp), "NigRegression: invalid hyperparameters");
  const Decoded dec = decode(hp);
  return Density::normal_inverse_gamma(dec.mu, dec.lambda, dec.alpha, dec.beta);
}

std::vector<std::string> NigRegression::param_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < d_; ++i) names.push_back("b" + std::to_string(i + 1));
  names.push_back("variance");
  return names;
}

// --- BetaBinomial -----------------------------------------------------------

HyperParams BetaBinomial::prior(double a, double b) {
  require(a > 0.0 && b > 0.0, "BetaBinomial: pseudo-counts must be positive");
  HyperParams hp;
  hp.chi.resize(2);
  hp.chi << a, b;
  hp.nu.resize(0);
  return hp;
}

SuffStat BetaBinomial::count_stat(double successes, double trials) {
  SuffStat st;
  st.s.resize(2);
  st.s << successes, trials - successes;
  st.r.resize(0);
  return st;
}

bool BetaBinomial::valid(const HyperParams& hp) const {
  if (hp.chi.size() != 2 || hp.nu.size() != 0) return false;
  return std::isfinite(hp.chi[0]) && std::isfinite(hp.chi[1]) && hp.chi[0] > 0.0 && hp.chi[1] > 0.0;
}

double BetaBinomial::log_g_channel(int, const double* chi, const double*) const {
  // -log B(a, b)
  return std::lgamma(chi[0] + chi[1]) - lgamma_cached(chi[0]) - lgamma_cached(chi[1]);
}

double BetaBinomial::natural_dot(const ParamDraw& theta, const SuffStat& st) const {
  const double p = theta[0];
  const double lp = (p > 0.0) ? std::log(p) : neg_inf;
  const double lq = (p < 1.0) ? std::log1p(-p) : neg_inf;
  double out = 0.0;
  if (st.s[0] != 0.0) out += st.s[0] * lp;
  if (st.s[1] != 0.0) out += st.s[1] * lq;
  return out;
}

ParamDraw BetaBinomial::sample_posterior(const HyperParams& hp, RngStream& rng) const {
  require(valid(hp), "BetaBinomial: invalid hyperparameters");
  ParamDraw out(1);
  out[0] = rng.beta(hp.chi[0], hp.chi[1]);
  return out;
}

Density BetaBinomial::posterior_density(const HyperParams& hp) const {
  require(valid(hp), "BetaBinomial: invalid hyperparameters");
  return Density::beta(hp.chi[0], hp.chi[1]);
}

// --- ProductFamily ----------------------------------------------------------

ProductFamily::ProductFamily(std::vector<std::shared_ptr<const ConjugateFamily>> components,
                             std::vector<std::string> labels)
    : components_(std::move(components)), labels_(std::move(labels)) {
  require(!components_.empty(), "ProductFamily: need at least one component");
  if (labels_.empty())
    for (size_t i = 0; i < components_.size(); ++i) labels_.push_back("c" + std::to_string(i + 1));
  require(labels_.size() == components_.size(), "ProductFamily: one label per component");
  for (size_t k = 0; k < components_.size(); ++k) {
    const ConjugateFamily& f = *components_[k];
    for (int c = 0; c < f.num_channels(); ++c) {
      ChannelLayout l = f.channel(c);
      l.chi_off += chi_dim_;
      l.nu_off += nu_dim_;
      layout_.push_back(l);
      channel_component_.push_back(static_cast<int>(k));
      channel_local_.push_back(c);
    }
    param_off_.push_back(param_dim_);
    chi_dim_ += f.chi_dim();
    nu_dim_ += f.nu_dim();
    param_dim_ += f.param_dim();
    n_channels_ += f.num_channels();
  }
  require(chi_dim_ <= max_stat_dim && nu_dim_ <= max_stat_dim,
          "ProductFamily: combined dimensions exceed the compiled statistic size");
}

HyperParams ProductFamily::concat_hp(const std::vector<HyperParams>& parts) {
  int nc = 0, nn = 0;
  for (const auto& p : parts) {
    nc += static_cast<int>(p.chi.size());
    nn += static_cast<int>(p.nu.size());
  }
  HyperParams out;
  out.chi.resize(nc);
  out.nu.resize(nn);
  int ic = 0, in = 0;
  for (const auto& p : parts) {
    out.chi.segment(ic, p.chi.size()) = p.chi;
    out.nu.segment(in, p.nu.size()) = p.nu;
    ic += static_cast<int>(p.chi.size());
    in += static_cast<int>(p.nu.size());
  }
  return out;
}

SuffStat ProductFamily::concat_stat(const std::vector<SuffStat>& parts) {
  int ns = 0, nr = 0;
  for (const auto& p : parts) {
    ns += static_cast<int>(p.s.size());
    nr += static_cast<int>(p.r.size());
  }
  SuffStat out;
  out.s.resize(ns);
  out.r.resize(nr);
  int is = 0, ir = 0;
  for (const auto& p : parts) {
    out.s.segment(is, p.s.size()) = p.s;
    out.r.segment(ir, p.r.size()) = p.r;
    is += static_cast<int>(p.s.size());
    ir += static_cast<int>(p.r.size());
  }
  return out;
}

bool ProductFamily::valid(const HyperParams& hp) const {
  if (hp.chi.size() != chi_dim_ || hp.nu.size() != nu_dim_) return false;
  int ic = 0, in = 0;
  for (const auto& f : components_) {
    HyperParams part;
    part.chi = hp.chi.segment(ic, f->chi_dim());
    part.nu = hp.nu.segment(in, f->nu_dim());
    if (!f->valid(part)) return false;
    ic += f->chi_dim();
    in += f->nu_dim();
  }
  return true;
}

double ProductFamily::log_g_channel(int c, const double* chi, const double* nu) const {
  return components_[channel_component_[c]]->log_g_channel(channel_local_[c], chi, nu);
}

double ProductFamily::natural_dot(const ParamDraw& theta, const SuffStat& st) const {
  double total = 0.0;
  int ic = 0, in = 0;
  for (size_t k = 0; k < components_.size(); ++k) {
    const ConjugateFamily& f = *components_[k];
    SuffStat part;
    part.s = st.s.segment(ic, f.chi_dim());
    part.r = st.r.segment(in, f.nu_dim());
    total += f.natural_dot(theta.segment(param_off_[k], f.param_dim()), part);
    ic += f.chi_dim();
    in += f.nu_dim();
  }
  return total;
}

ParamDraw ProductFamily::sample_posterior(const HyperParams& hp, RngStream& rng) const {
  require(valid(hp), "ProductFamily: invalid hyperparameters");
  ParamDraw out(param_dim_);
  int ic = 0, in = 0;
  for (size_t k = 0; k < components_.size(); ++k) {
    const ConjugateFamily& f = *components_[k];
    HyperParams part;
    part.chi = hp.chi.segment(ic, f.chi_dim());
    part.nu = hp.nu.segment(in, f.nu_dim());
    out.segment(param_off_[k], f.param_dim()) = f.sample_posterior(part, rng);
    ic += f.chi_dim();
    in += f.nu_dim();
  }
  return out;
}

std::vector<std::string> ProductFamily::param_names() const {
  std::vector<std::string> names;
  for (size_t k = 0; k < components_.size(); ++k)
    for (const auto& n : components_[k]->param_names()) names.push_back(labels_[k] + "_" + n);
  return names;
}

// --- free operations --------------------------------------------------------

HyperParams update_hyperparams(const HyperParams& hp, const SuffStat& st) {
  require(hp.chi.size() == st.s.size() && hp.nu.size() == st.r.size(),
          "update_hyperparams: dimension mismatch");
  HyperParams out;
  out.chi = hp.chi + st.s;
  out.nu = hp.nu + st.r;
  return out;
}

HyperParams downdate_hyperparams(const ConjugateFamily& fam, const HyperParams& hp,
                                 const SuffStat& st) {
  require(hp.chi.size() == st.s.size() && hp.nu.size() == st.r.size(),
          "downdate_hyperparams: dimension mismatch");
  HyperParams out;
  out.chi = hp.chi - st.s;
  out.nu = hp.nu - st.r;
  if (!fam.valid(out))
    throw std::invalid_argument("downdate_hyperparams: result leaves the valid region");
  return out;
}

double predictive_logpdf(const ConjugateFamily& fam, const HyperParams& hp, const SuffStat& st,
                         double log_base) {
  require(fam.valid(hp), "predictive_logpdf: invalid hyperparameters");
  if (log_base == neg_inf) return neg_inf;
  const HyperParams post = update_hyperparams(hp, st);
  const double out = log_base + fam.log_g(hp) - fam.log_g(post);
  return std::isnan(out) ? neg_inf : out;
}

}  // namespace margsmc
