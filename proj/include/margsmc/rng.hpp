#pragma once

#include <array>
#include <cstdint>
#include <cmath>

#include <Eigen/Dense>

namespace margsmc {

namespace detail {

// splitmix64 finalizer; used to derive substream ids.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

// Counter-based stream (Philox 4x64-10). A stream is identified by
// (seed, stream_id); every draw is a pure function of that key and a running
// block counter, so draws never depend on which thread holds the stream.
// substream(k) derives a statistically independent stream without consuming
// any draws from the parent, which gives per-(step, particle) substreams and
// thread-count-independent output.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  RngStream substream(std::uint64_t index) const {
    return RngStream(seed_, detail::mix64(detail::mix64(stream_) + index));
  }

  std::uint64_t next_u64() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  // Strictly inside (0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal, polar method. The spare is cached, so draw counts stay
  // deterministic for a given stream regardless of caller interleaving.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Gamma(shape, 1), Marsaglia-Tsang. Shapes below one go through the
  // boosting identity G(a) = G(a+1) * U^(1/a); for very small shapes the
  // power factor can underflow to zero, which is the correct limit.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform01(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // InverseGamma(shape, rate): x ~ rate / Gamma(shape, 1).
  double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  // Student-t with dof degrees of freedom, polar variant (Bailey). Valid for
  // any dof > 0; tiny dof produces the correct heavy-tail behaviour (draws
  // overflow to +-inf with the right probability).
  double student_t(double dof) {
    double u, v, w;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      w = u * u + v * v;
    } while (w >= 1.0 || w == 0.0);
    const double r = std::sqrt(dof * (std::pow(w, -2.0 / dof) - 1.0) / w);
    return u * r;
  }

  // Binomial(n, p) by inversion, walking outward from the mode. Exact, uses a
  // single uniform, and costs O(sd) steps per draw.
  long binomial(long n, double p);

  // Index draw from unnormalized nonnegative weights (linear scan).
  int categorical(const Eigen::ArrayXd& weights);

 private:
  void refill() {
    std::uint64_t c0 = counter_, c1 = 0, c2 = 0, c3 = 0;
    std::uint64_t k0 = seed_, k1 = stream_;
    for (int r = 0; r < 10; ++r) {
      std::uint64_t hi0, lo0, hi1, lo1;
      detail::mulhilo64(0xD2E7470EE14C6C93ULL, c0, hi0, lo0);
      detail::mulhilo64(0xCA5A826395121157ULL, c2, hi1, lo1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += 0x9E3779B97F4A7C15ULL;
      k1 += 0xBB67AE8584CAA73BULL;
    }
    buf_ = {c0, c1, c2, c3};
    ++counter_;
    pos_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace margsmc
