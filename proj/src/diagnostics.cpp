#include "margsmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "margsmc/util.hpp"

namespace margsmc {

namespace {

// Autocovariance at one lag with the biased 1/n normalization.
double autocov(const Eigen::VectorXd& x, double mean, int lag) {
  const int n = static_cast<int>(x.size());
  double acc = 0.0;
  for (int t = 0; t + lag < n; ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
  return acc / n;
}

}  // namespace

Eigen::VectorXd acf(const Eigen::VectorXd& series, int max_lag) {
  const int n = static_cast<int>(series.size());
  require(n >= 2, "acf: need at least two samples");
  require(max_lag >= 0 && max_lag < n, "acf: max_lag must be in [0, n)");
  const double mean = series.mean();
  const double g0 = autocov(series, mean, 0);
  require(g0 > 0.0, "acf: series is constant");
  Eigen::VectorXd out(max_lag + 1);
  out[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k) out[k] = autocov(series, mean, k) / g0;
  return out;
}

double effective_sample_size(const Eigen::VectorXd& series) {
  const int n = static_cast<int>(series.size());
  require(n >= 2, "effective_sample_size: need at least two samples");
  const double mean = series.mean();
  const double g0 = autocov(series, mean, 0);
  require(g0 > 0.0, "effective_sample_size: series is constant");

  // Sum paired autocorrelations while the pairs stay positive.
  double tau = -1.0;
  for (int m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(series, mean, 2 * m) + autocov(series, mean, 2 * m + 1)) / g0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / n);
  return n / tau;
}

double batch_means_se(const Eigen::VectorXd& series) {
  const int n = static_cast<int>(series.size());
  require(n >= 4, "batch_means_se: need at least four samples");
  const int b = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  const int a = n / b;
  Eigen::VectorXd means(a);
  for (int j = 0; j < a; ++j) means[j] = series.segment(static_cast<Eigen::Index>(j) * b, b).mean();
  const double grand = means.mean();
  const double var = (means.array() - grand).square().sum() / (a - 1);
  return std::sqrt(var / a);
}

Eigen::VectorXd update_frequency(const Eigen::MatrixXd& trajectories) {
  const int m = static_cast<int>(trajectories.rows());
  require(m >= 2, "update_frequency: need at least two iterations");
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(trajectories.cols());
  for (int r = 1; r < m; ++r)
    freq += (trajectories.row(r).array() != trajectories.row(r - 1).array())
                .cast<double>()
                .matrix()
                .transpose();
  return freq / (m - 1);
}

KsResult ks_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  require(na >= 1 && nb >= 1, "ks_two_sample: need nonempty samples");
  std::vector<double> xa(a.data(), a.data() + na), xb(b.data(), b.data() + nb);
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());

  double d = 0.0;
  int ia = 0, ib = 0;
  while (ia < na && ib < nb) {
    const double xi = std::min(xa[ia], xb[ib]);
    while (ia < na && xa[ia] <= xi) ++ia;
    while (ib < nb && xb[ib] <= xi) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }

  const double ne = static_cast<double>(na) * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  // The alternating series only converges for lambda > 0; at d = 0 the
  // answer is exactly 1.
  double p = 1.0;
  if (lambda > 0.0) {
    p = 0.0;
    for (int j = 1; j <= 100; ++j) {
      const double term =
          2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
      p += term;
      if (std::abs(term) < 1e-12) break;
    }
  }
  KsResult res;
  res.statistic = d;
  res.p_value = std::min(1.0, std::max(0.0, p));
  return res;
}

double quantile(const Eigen::VectorXd& series, double p) {
  const int n = static_cast<int>(series.size());
  require(n >= 1, "quantile: need samples");
  require(p >= 0.0 && p <= 1.0, "quantile: p must be in [0, 1]");
  std::vector<double> x(series.data(), series.data() + n);
  std::sort(x.begin(), x.end());
  const double h = p * (n - 1);
  const int lo = static_cast<int>(std::floor(h));
  if (lo + 1 >= n) return x[n - 1];
  return x[lo] + (h - lo) * (x[lo + 1] - x[lo]);
}

Summary summarize(const Eigen::VectorXd& series) {
  const int n = static_cast<int>(series.size());
  require(n >= 1, "summarize: need samples");
  Summary s;
  s.n = n;
  s.mean = series.mean();
  s.sd = n > 1 ? std::sqrt((series.array() - s.mean).square().sum() / (n - 1)) : 0.0;
  s.median = quantile(series, 0.5);
  s.q05 = quantile(series, 0.05);
  s.q95 = quantile(series, 0.95);
  s.min = series.minCoeff();
  s.max = series.maxCoeff();
  return s;
}

Histogram histogram(const Eigen::VectorXd& series, int bins, double lo, double hi) {
  require(bins >= 1, "histogram: need at least one bin");
  require(lo < hi, "histogram: lo must be below hi");
  Histogram h;
  h.edges = Eigen::VectorXd::LinSpaced(bins + 1, lo, hi);
  h.counts = Eigen::VectorXd::Zero(bins);
  const double w = (hi - lo) / bins;
  for (int i = 0; i < series.size(); ++i) {
    int k = static_cast<int>(std::floor((series[i] - lo) / w));
    k = std::min(std::max(k, 0), bins - 1);
    h.counts[k] += 1.0;
  }
  return h;
}

Eigen::VectorXd thin(const Eigen::VectorXd& series, int stride) {
  require(stride >= 1, "thin: stride must be positive");
  const int n = static_cast<int>(series.size());
  const int m = (n + stride - 1) / stride;
  Eigen::VectorXd out(m);
  for (int i = 0; i < m; ++i) out[i] = series[static_cast<Eigen::Index>(i) * stride];
  return out;
}

}  // namespace margsmc
