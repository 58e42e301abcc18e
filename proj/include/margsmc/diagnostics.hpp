#pragma once

#include <Eigen/Dense>
#include <vector>

namespace margsmc {

// Autocorrelation with biased (1/n) normalization; result[0] == 1.
// Throws if the series is constant or shorter than two elements.
Eigen::VectorXd acf(const Eigen::VectorXd& series, int max_lag);

// Effective sample size via the initial-positive-sequence estimator:
// sum paired autocovariances while the pair sums stay positive.
double effective_sample_size(const Eigen::VectorXd& series);

// Monte Carlo standard error of the mean from sqrt(n) nonoverlapping batches.
double batch_means_se(const Eigen::VectorXd& series);

// Fraction of consecutive iterations in which each state coordinate changed.
// Rows index iterations, columns index time.
Eigen::VectorXd update_frequency(const Eigen::MatrixXd& trajectories);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Empirical quantile by linear interpolation of order statistics, p in [0,1].
double quantile(const Eigen::VectorXd& series, double p);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n = 0;
};

Summary summarize(const Eigen::VectorXd& series);

struct Histogram {
  Eigen::VectorXd edges;   // bins + 1 ascending edges
  Eigen::VectorXd counts;  // bins entries; out-of-range values clamp to end bins
};

Histogram histogram(const Eigen::VectorXd& series, int bins, double lo, double hi);

// Every stride-th element starting at the first.
Eigen::VectorXd thin(const Eigen::VectorXd& series, int stride);

}  // namespace margsmc
