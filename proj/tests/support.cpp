#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

namespace {

// Gauss-Kronrod 15(7) nodes and weights on [-1, 1] (positive half; symmetric).
const double kx[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                      0.741531185599394, 0.586087235467691, 0.405845151377397,
                      0.207784955007898, 0.0};
const double kw[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                      0.140653259715525, 0.169004726639267, 0.190350578064785,
                      0.204432940075298, 0.209482141084728};
const double gw[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                      0.417959183673469};

void gk15(const std::function<double(double)>& f, double a, double b, double& kres,
          double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double fv =
        i == 7 ? f(c) : f(c - h * kx[i]) + f(c + h * kx[i]);
    k += kw[i] * fv;
    if (i % 2 == 1) g += gw[i / 2] * fv;
  }
  kres = k * h;
  err = std::abs((k - g) * h);
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
  double k, err;
  gk15(f, a, b, k, err);
  if (err <= tol * (1.0 + std::abs(k)) || depth >= 60) return k;
  const double c = 0.5 * (a + b);
  return adapt(f, a, c, tol * 0.5, depth + 1) + adapt(f, c, b, tol * 0.5, depth + 1);
}

// Regularized lower incomplete gamma P(a, x), Numerical Recipes style.
double gammp(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammp domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Continued fraction for Q(a, x).
  const double fpmin = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

// Continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
  const double fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("betai domain");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  return adapt(f, a, b, tol, 0);
}

double integrate_upper(const std::function<double(double)>& f, double a, double tol) {
  return adapt(
      [&](double t) {
        const double om = 1.0 - t;
        return f(a + t / om) / (om * om);
      },
      0.0, 1.0 - 1e-14, tol, 0);
}

double integrate_line(const std::function<double(double)>& f, double tol) {
  return adapt(
      [&](double t) {
        const double om = 1.0 - t * t;
        return f(t / om) * (1.0 + t * t) / (om * om);
      },
      -1.0 + 1e-14, 1.0 - 1e-14, tol, 0);
}

Kalman kalman(double phi, double q, double r, double m0, double p0, const Eigen::VectorXd& y) {
  const int T = static_cast<int>(y.size());
  Kalman out;
  out.filter_mean.resize(T + 1);
  out.filter_var.resize(T + 1);
  out.filter_mean[0] = m0;
  out.filter_var[0] = p0;

  Eigen::VectorXd pred_mean(T + 1), pred_var(T + 1);
  double log_ev = 0.0;
  for (int t = 1; t <= T; ++t) {
    pred_mean[t] = phi * out.filter_mean[t - 1];
    pred_var[t] = phi * phi * out.filter_var[t - 1] + q;
    const double s = pred_var[t] + r;
    const double innov = y[t - 1] - pred_mean[t];
    log_ev += -0.5 * (std::log(2.0 * M_PI * s) + innov * innov / s);
    const double gain = pred_var[t] / s;
    out.filter_mean[t] = pred_mean[t] + gain * innov;
    out.filter_var[t] = (1.0 - gain) * pred_var[t];
  }
  out.log_evidence = log_ev;

  out.smooth_mean = out.filter_mean;
  out.smooth_var = out.filter_var;
  for (int t = T - 1; t >= 0; --t) {
    const double c = out.filter_var[t] * phi / pred_var[t + 1];
    out.smooth_mean[t] = out.filter_mean[t] + c * (out.smooth_mean[t + 1] - pred_mean[t + 1]);
    out.smooth_var[t] =
        out.filter_var[t] + c * c * (out.smooth_var[t + 1] - pred_var[t + 1]);
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return gammp(shape, rate * x);
}

double student_t_cdf(double x, double dof) {
  const double p = 0.5 * betai(0.5 * dof, 0.5, dof / (dof + x * x));
  return x >= 0.0 ? 1.0 - p : p;
}

double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return betai(a, b, x);
}

double binomial_cdf(long k, long n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  double acc = 0.0;
  for (long j = 0; j <= k; ++j) {
    const double lt = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                      j * std::log(p) + (n - j) * std::log1p(-p);
    acc += std::exp(lt);
  }
  return std::min(1.0, acc);
}

double ks_statistic(Eigen::VectorXd samples, const std::function<double(double)>& cdf) {
  std::sort(samples.data(), samples.data() + samples.size());
  const int n = static_cast<int>(samples.size());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = cdf(samples[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
  }
  return d;
}

double ks_pvalue(double statistic, int n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term =
        2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace oracle
