#include "margsmc/rng.hpp"

#include <stdexcept>

#include "margsmc/util.hpp"

namespace margsmc {

long RngStream::binomial(long n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: need n >= 0, p in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;

  const double nd = static_cast<double>(n);
  const long mode = static_cast<long>(std::floor((nd + 1.0) * p));
  const long m = mode > n ? n : mode;
  const double logpm = log_binomial_coef(nd, static_cast<double>(m)) + m * std::log(p) +
                       (nd - m) * std::log1p(-p);
  const double pm = std::exp(logpm);
  const double odds = p / (1.0 - p);

  const double u = uniform01();
  double acc = pm;
  if (u <= acc) return m;

  // Alternate outward: pmf ratios keep the walk exact.
  long lo = m, hi = m;
  double plo = pm, phi = pm;
  for (;;) {
    bool moved = false;
    if (hi < n) {
      ++hi;
      phi *= (nd - (hi - 1)) / static_cast<double>(hi) * odds;
      acc += phi;
      moved = true;
      if (u <= acc) return hi;
    }
    if (lo > 0) {
      plo *= static_cast<double>(lo) / (nd - (lo - 1)) / odds;
      --lo;
      acc += plo;
      moved = true;
      if (u <= acc) return lo;
    }
    if (!moved) return u <= acc + 1e-12 ? hi : hi;  // rounding tail: mass is exhausted
  }
}

int RngStream::categorical(const Eigen::ArrayXd& weights) {
  const double total = weights.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("categorical: weights must be nonnegative with positive finite sum");
  const double u = uniform01() * total;
  double acc = 0.0;
  const int n = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) {
    acc += weights[i];
    if (u <= acc) return i;
  }
  return n - 1;
}

}  // namespace margsmc
