#pragma once

#include <Eigen/Dense>
#include <string>

#include "margsmc/rng.hpp"

namespace margsmc {

// A parametrized distribution that can be sampled and evaluated in log space.
// Parameters are validated at construction; invalid values raise
// std::invalid_argument naming the offending field. Off-support points
// evaluate to -inf, never NaN.
class Density {
 public:
  enum class Tag {
    gaussian,            // mean, variance
    inverse_gamma,       // shape, rate
    normal_inverse_gamma,// mu (d), precision matrix, shape, rate; joint over (coeffs, variance)
    beta,                // a, b
    binomial,            // n, p
    student_t,           // dof, location, scale
    categorical,         // weight vector (unnormalized)
    uniform,             // lower, upper
  };

  static Density gaussian(double mean, double variance);
  static Density inverse_gamma(double shape, double rate);
  static Density normal_inverse_gamma(const Eigen::VectorXd& mu, const Eigen::MatrixXd& precision,
                                      double shape, double rate);
  static Density beta(double a, double b);
  static Density binomial(long n, double p);
  static Density student_t(double dof, double location, double scale);
  static Density categorical(const Eigen::VectorXd& weights);
  static Density uniform(double lower, double upper);

  Tag tag() const { return tag_; }
  int dim() const;

  // Joint draw; scalar families return a 1-vector, the normal-inverse-gamma
  // returns (coeffs..., variance).
  Eigen::VectorXd sample(RngStream& rng) const;
  double sample_scalar(RngStream& rng) const;

  double log_pdf(const Eigen::VectorXd& x) const;
  double log_pdf(double x) const;

 private:
  Density(Tag tag, Eigen::VectorXd par, Eigen::MatrixXd mat = Eigen::MatrixXd())
      : tag_(tag), par_(std::move(par)), mat_(std::move(mat)) {}

  Tag tag_;
  Eigen::VectorXd par_;
  Eigen::MatrixXd mat_;
};

}  // namespace margsmc
