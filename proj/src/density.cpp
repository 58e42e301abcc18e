#include "margsmc/density.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "margsmc/util.hpp"

namespace margsmc {

namespace {

void check_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("Density: ") + field + " must be finite");
}

void check_pos(double v, const char* field) {
  check_finite(v, field);
  if (!(v > 0.0)) throw std::invalid_argument(std::string("Density: ") + field + " must be positive");
}

}  // namespace

Density Density::gaussian(double mean, double variance) {
  check_finite(mean, "mean");
  check_pos(variance, "variance");
  Eigen::VectorXd p(2);
  p << mean, variance;
  return Density(Tag::gaussian, std::move(p));
}

Density Density::inverse_gamma(double shape, double rate) {
  check_pos(shape, "shape");
  check_pos(rate, "rate");
  Eigen::VectorXd p(2);
  p << shape, rate;
  return Density(Tag::inverse_gamma, std::move(p));
}

Density Density::normal_inverse_gamma(const Eigen::VectorXd& mu, const Eigen::MatrixXd& precision,
                                      double shape, double rate) {
  check_pos(shape, "shape");
  check_pos(rate, "rate");
  const int d = static_cast<int>(mu.size());
  if (precision.rows() != d || precision.cols() != d)
    throw std::invalid_argument("Density: precision must be d x d");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("Density: precision must be positive definite");
  Eigen::VectorXd p(d + 2);
  p << shape, rate, mu;
  return Density(Tag::normal_inverse_gamma, std::move(p), precision);
}

Density Density::beta(double a, double b) {
  check_pos(a, "a");
  check_pos(b, "b");
  Eigen::VectorXd p(2);
  p << a, b;
  return Density(Tag::beta, std::move(p));
}

Density Density::binomial(long n, double p) {
  if (n < 0) throw std::invalid_argument("Density: n must be nonnegative");
  check_finite(p, "p");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("Density: p must lie in [0,1]");
  Eigen::VectorXd q(2);
  q << static_cast<double>(n), p;
  return Density(Tag::binomial, std::move(q));
}

Density Density::student_t(double dof, double location, double scale) {
  check_pos(dof, "dof");
  check_finite(location, "location");
  check_pos(scale, "scale");
  Eigen::VectorXd p(3);
  p << dof, location, scale;
  return Density(Tag::student_t, std::move(p));
}

Density Density::categorical(const Eigen::VectorXd& weights) {
  if (weights.size() == 0) throw std::invalid_argument("Density: weights must be nonempty");
  double total = 0.0;
  for (int i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw std::invalid_argument("Density: weights must be finite and nonnegative");
    total += weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("Density: weights must have positive sum");
  return Density(Tag::categorical, weights);
}

Density Density::uniform(double lower, double upper) {
  check_finite(lower, "lower");
  check_finite(upper, "upper");
  if (!(upper > lower)) throw std::invalid_argument("Density: upper must exceed lower");
  Eigen::VectorXd p(2);
  p << lower, upper;
  return Density(Tag::uniform, std::move(p));
}

int Density::dim() const {
  return tag_ == Tag::normal_inverse_gamma ? static_cast<int>(par_.size()) - 1 : 1;
}

Eigen::VectorXd Density::sample(RngStream& rng) const {
  if (tag_ == Tag::normal_inverse_gamma) {
    const double shape = par_[0], rate = par_[1];
    const int d = static_cast<int>(par_.size()) - 2;
    const double var = rng.inverse_gamma(shape, rate);
    // coeffs | var ~ N(mu, var * precision^-1)
    Eigen::MatrixXd cov = var * mat_.llt().solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    Eigen::VectorXd out(d + 1);
    out.head(d) = par_.segment(2, d) + llt.matrixL() * z;
    out[d] = var;
    return out;
  }
  Eigen::VectorXd out(1);
  out[0] = sample_scalar(rng);
  return out;
}

double Density::sample_scalar(RngStream& rng) const {
  switch (tag_) {
    case Tag::gaussian:
      return par_[0] + std::sqrt(par_[1]) * rng.normal();
    case Tag::inverse_gamma:
      return rng.inverse_gamma(par_[0], par_[1]);
    case Tag::beta:
      return rng.beta(par_[0], par_[1]);
    case Tag::binomial:
      return static_cast<double>(rng.binomial(static_cast<long>(par_[0]), par_[1]));
    case Tag::student_t:
      return par_[1] + par_[2] * rng.student_t(par_[0]);
    case Tag::categorical:
      return static_cast<double>(rng.categorical(par_.array()));
    case Tag::uniform:
      return rng.uniform(par_[0], par_[1]);
    case Tag::normal_inverse_gamma:
      throw std::logic_error("Density: joint family has no scalar draw");
  }
  throw std::logic_error("Density: unknown tag");
}

double Density::log_pdf(double x) const {
  Eigen::VectorXd v(1);
  v[0] = x;
  return log_pdf(v);
}

double Density::log_pdf(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("Density: point has wrong dimension");
  for (int i = 0; i < x.size(); ++i)
    if (std::isnan(x[i])) return neg_inf;
  switch (tag_) {
    case Tag::gaussian: {
      if (!std::isfinite(x[0])) return neg_inf;
      const double e = x[0] - par_[0];
      return -0.5 * (log_2pi + std::log(par_[1])) - 0.5 * e * e / par_[1];
    }
    case Tag::inverse_gamma: {
      if (!(x[0] > 0.0) || !std::isfinite(x[0])) return neg_inf;
      const double a = par_[0], b = par_[1];
      return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x[0]) - b / x[0];
    }
    case Tag::normal_inverse_gamma: {
      const int d = static_cast<int>(par_.size()) - 2;
      const double var = x[d];
      if (!(var > 0.0) || !std::isfinite(var)) return neg_inf;
      for (int i = 0; i < d; ++i)
        if (!std::isfinite(x[i])) return neg_inf;
      const double a = par_[0], b = par_[1];
      const Eigen::VectorXd e = x.head(d) - par_.segment(2, d);
      const double quad = e.dot(mat_ * e);
      const double logdet = std::log(mat_.llt().matrixL().determinant()) * 2.0;
      const double ig = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(var) - b / var;
      return ig - 0.5 * d * (log_2pi + std::log(var)) + 0.5 * logdet - 0.5 * quad / var;
    }
    case Tag::beta: {
      const double a = par_[0], b = par_[1];
      if (!(x[0] >= 0.0 && x[0] <= 1.0)) return neg_inf;
      if (x[0] == 0.0) return a > 1.0 ? neg_inf : (a == 1.0 ? std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) : INFINITY);
      if (x[0] == 1.0) return b > 1.0 ? neg_inf : (b == 1.0 ? std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) : INFINITY);
      return (a - 1.0) * std::log(x[0]) + (b - 1.0) * std::log1p(-x[0]) + std::lgamma(a + b) -
             std::lgamma(a) - std::lgamma(b);
    }
    case Tag::binomial: {
      const double n = par_[0], p = par_[1];
      if (x[0] < 0.0 || x[0] > n || x[0] != std::floor(x[0])) return neg_inf;
      const double k = x[0];
      const double lp = (p > 0.0) ? k * std::log(p) : (k == 0.0 ? 0.0 : neg_inf);
      const double lq = (p < 1.0) ? (n - k) * std::log1p(-p) : (k == n ? 0.0 : neg_inf);
      return log_binomial_coef(n, k) + lp + lq;
    }
    case Tag::student_t: {
      if (!std::isfinite(x[0])) return neg_inf;
      const double v = par_[0], s = par_[2];
      const double z = (x[0] - par_[1]) / s;
      return std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) - 0.5 * std::log(v * M_PI) -
             std::log(s) - 0.5 * (v + 1.0) * std::log1p(z * z / v);
    }
    case Tag::categorical: {
      const int k = static_cast<int>(x[0]);
      if (x[0] != std::floor(x[0]) || k < 0 || k >= par_.size()) return neg_inf;
      if (par_[k] == 0.0) return neg_inf;
      return std::log(par_[k]) - std::log(par_.sum());
    }
    case Tag::uniform: {
      if (x[0] < par_[0] || x[0] > par_[1]) return neg_inf;
      return -std::log(par_[1] - par_[0]);
    }
  }
  throw std::logic_error("Density: unknown tag");
}

}  // namespace margsmc
