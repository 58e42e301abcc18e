#include <doctest.h>

#include <cmath>
#include <set>
#include <thread>
#include <vector>

#include "margsmc/rng.hpp"
#include "support.hpp"

using margsmc::RngStream;

TEST_CASE("identical (seed, stream) reproduces the same sequence") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform01() == b.uniform01());
}

TEST_CASE("different streams and seeds differ") {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const double ua = a.uniform01();
    same_ab += ua == b.uniform01();
    same_ac += ua == c.uniform01();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("substream derivation is deterministic and draw-free") {
  RngStream root(5, 0);
  RngStream s1 = root.substream(3);
  RngStream s2 = root.substream(3);
  CHECK(s1.uniform01() == s2.uniform01());
  // Deriving substreams does not advance the parent.
  RngStream fresh(5, 0);
  (void)fresh.substream(123);
  RngStream fresh2(5, 0);
  CHECK(fresh.uniform01() == fresh2.uniform01());
}

TEST_CASE("uniform01 lies strictly inside (0,1)") {
  RngStream rng(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("distinct streams are uncorrelated") {
  const int n = 100000;
  RngStream a(9, 1), b(9, 2);
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform01() - 0.5, y = b.uniform01() - 0.5;
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double corr = (sab - sa * sb / n) / std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
  // 5 / sqrt(n) bound on the correlation of independent sequences.
  CHECK(std::abs(corr) < 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("uniform draws pass a KS test") {
  const int n = 10000;
  RngStream rng(11, 0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform01();
  const double d = oracle::ks_statistic(x, [](double v) { return v; });
  CHECK(oracle::ks_pvalue(d, n) > 0.001);
}

TEST_CASE("normal draws: moments and KS") {
  const int n = 100000;
  RngStream rng(12, 0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.normal();
  CHECK(std::abs(x.mean()) < 5.0 / std::sqrt(static_cast<double>(n)));
  const double var = (x.array() - x.mean()).square().sum() / (n - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
  const double d = oracle::ks_statistic(x.head(10000), [](double v) { return oracle::normal_cdf(v); });
  CHECK(oracle::ks_pvalue(d, 10000) > 0.001);
}

TEST_CASE("gamma draws match the gamma CDF across shapes") {
  RngStream rng(13, 0);
  for (const double shape : {0.3, 1.0, 2.5, 17.0}) {
    const int n = 10000;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.gamma(shape);
    const double d =
        oracle::ks_statistic(x, [&](double v) { return oracle::gamma_cdf(v, shape, 1.0); });
    CHECK_MESSAGE(oracle::ks_pvalue(d, n) > 0.001, "shape = ", shape);
  }
}

TEST_CASE("inverse gamma draws have the right mean") {
  RngStream rng(14, 0);
  const double shape = 4.0, rate = 6.0;  // mean rate/(shape-1) = 2, finite variance
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rng.inverse_gamma(shape, rate);
  // var = rate^2 / ((a-1)^2 (a-2)) = 2; 5 sigma bound.
  CHECK(std::abs(acc / n - 2.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("student t draws match the t CDF, including small dof") {
  RngStream rng(15, 0);
  for (const double dof : {0.5, 1.0, 3.0, 30.0}) {
    const int n = 10000;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.student_t(dof);
    const double d =
        oracle::ks_statistic(x, [&](double v) { return oracle::student_t_cdf(v, dof); });
    CHECK_MESSAGE(oracle::ks_pvalue(d, n) > 0.001, "dof = ", dof);
  }
}

TEST_CASE("beta draws match the beta CDF") {
  RngStream rng(16, 0);
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.5, 0.5}, {2, 5}, {7, 3}}) {
    const int n = 10000;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.beta(a, b);
    const double d = oracle::ks_statistic(x, [&, a = a, b = b](double v) {
      return oracle::beta_cdf(v, a, b);
    });
    CHECK_MESSAGE(oracle::ks_pvalue(d, n) > 0.001, "a = ", a, " b = ", b);
  }
}

TEST_CASE("binomial draws: exact edge cases and chi-square fit") {
  RngStream rng(17, 0);
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
  CHECK(rng.binomial(0, 0.5) == 0);

  const long trials = 9;
  const double p = 0.37;
  const int n = 100000;
  std::vector<int> counts(trials + 1, 0);
  for (int i = 0; i < n; ++i) ++counts[rng.binomial(trials, p)];
  double chi2 = 0.0;
  for (long k = 0; k <= trials; ++k) {
    const double pk = oracle::binomial_cdf(k, trials, p) - oracle::binomial_cdf(k - 1, trials, p);
    const double expect = n * pk;
    chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
  }
  // 9 degrees of freedom; crossing 33.7 has probability ~1e-4.
  CHECK(chi2 < 33.7);
}

TEST_CASE("binomial matches large-n normal approximation") {
  RngStream rng(18, 0);
  const long trials = 1000000;
  const double p = 0.25;
  const int n = 2000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += static_cast<double>(rng.binomial(trials, p));
  const double se = std::sqrt(trials * p * (1 - p) / n);
  CHECK(std::abs(acc / n - trials * p) < 5.0 * se);
}

TEST_CASE("categorical respects point masses and frequencies") {
  RngStream rng(19, 0);
  Eigen::ArrayXd point(3);
  point << 1.0, 0.0, 0.0;
  for (int i = 0; i < 50; ++i) CHECK(rng.categorical(point) == 0);

  Eigen::ArrayXd w(3);
  w << 0.2, 0.3, 0.5;
  const int n = 100000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) ++counts[rng.categorical(w)];
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(counts[k] / n - w[k]) < 5.0 * std::sqrt(w[k] * (1 - w[k]) / n));

  Eigen::ArrayXd bad(2);
  bad << 0.0, 0.0;
  CHECK_THROWS(rng.categorical(bad));
}

TEST_CASE("streams stay deterministic when consumed on different threads") {
  RngStream root(21, 0);
  std::vector<double> parallel(8);
  {
    std::vector<std::thread> workers;
    for (int i = 0; i < 8; ++i)
      workers.emplace_back([&parallel, &root, i] {
        RngStream s = root.substream(i);
        parallel[i] = s.normal();
      });
    for (auto& w : workers) w.join();
  }
  for (int i = 0; i < 8; ++i) {
    RngStream s = root.substream(i);
    CHECK(parallel[i] == s.normal());
  }
}
