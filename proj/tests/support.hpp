// Shared oracles for the test suites: adaptive quadrature, an exact scalar
// Kalman filter/smoother, and reference CDFs. Everything here is implemented
// from textbook formulas, independent of the library's code paths, so tests
// can compare the two.
#pragma once

#include <Eigen/Dense>
#include <functional>

namespace oracle {

// Adaptive Gauss-Kronrod 15(7) on [a, b]; subdivides until the local error
// estimate is below tol (absolute + relative mix).
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

// Integral over [a, infinity) via the substitution x = a + t/(1-t).
double integrate_upper(const std::function<double(double)>& f, double a, double tol = 1e-10);

// Integral over the whole line via x = t/(1-t^2).
double integrate_line(const std::function<double(double)>& f, double tol = 1e-10);

struct Kalman {
  double log_evidence = 0.0;
  Eigen::VectorXd filter_mean;  // E[x_t | y_1:t], t = 0..T (t=0 is the prior)
  Eigen::VectorXd filter_var;
  Eigen::VectorXd smooth_mean;  // E[x_t | y_1:T]
  Eigen::VectorXd smooth_var;
};

// Scalar model x_t = phi x_{t-1} + N(0, q), y_t = x_t + N(0, r), x_0 ~ N(m0, p0).
Kalman kalman(double phi, double q, double r, double m0, double p0, const Eigen::VectorXd& y);

// Reference CDFs (textbook series / continued-fraction implementations).
double normal_cdf(double z);
double gamma_cdf(double x, double shape, double rate);
double student_t_cdf(double x, double dof);
double beta_cdf(double x, double a, double b);
double binomial_cdf(long k, long n, double p);

// One-sample Kolmogorov-Smirnov against a CDF; returns the statistic.
double ks_statistic(Eigen::VectorXd samples, const std::function<double(double)>& cdf);

// Asymptotic KS p-value for a statistic from n samples.
double ks_pvalue(double statistic, int n);

}  // namespace oracle
