#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace margsmc {

inline constexpr double log_2pi = 1.8378770664093454835606594728112353;
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Hyperparameter and sufficient-statistic vectors are small (largest model in
// the repo needs 6 entries); capping the compile-time size keeps them on the
// stack in the per-particle loops.
inline constexpr int max_stat_dim = 12;
using SVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, max_stat_dim, 1>;

// log(sum(exp(v))) with max subtraction. All -inf => -inf.
inline double logsumexp(const Eigen::ArrayXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf/NaN propagates)
  return m + std::log((v - m).exp().sum());
}

// In-place: v <- normalized probabilities, returns logsumexp(v).
inline double normalize_logweights(Eigen::ArrayXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) throw std::runtime_error("normalize_logweights: all weights are zero");
  v = (v - m).exp();
  const double s = v.sum();
  v /= s;
  return m + std::log(s);
}

// lgamma with a tiny thread-local memo. In the samplers the shape argument is
// constant across particles within a step, so this hits nearly always.
inline double lgamma_cached(double x) {
  struct Slot {
    double x = -1.0;
    double v = 0.0;
  };
  thread_local Slot slots[4];
  thread_local int next = 0;
  for (const auto& s : slots)
    if (s.x == x) return s.v;
  const double v = std::lgamma(x);
  slots[next] = {x, v};
  next = (next + 1) & 3;
  return v;
}

inline double log_binomial_coef(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace margsmc
