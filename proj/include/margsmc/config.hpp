#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "margsmc/models.hpp"
#include "margsmc/samplers.hpp"

namespace margsmc {

struct ModelConfig {
  std::string id;  // benchmark | linear-gaussian | population | epidemic

  // Gaussian-noise models.
  double phi = 0.9;  // linear-gaussian only
  double alpha_v = 1.0, beta_v = 1.0, alpha_w = 1.0, beta_w = 1.0;
  std::optional<double> x0_mean = 0.0;  // population: empty means log of first observation
  double x0_var = 5.0;

  // population only
  double c = 0.0;
  Eigen::Vector2d mu = Eigen::Vector2d::Ones();
  Eigen::Matrix2d lambda = Eigen::Matrix2d::Identity();
  double c_prior_var = 1.0;

  // epidemic only
  long x0_count = 0;
  double survival = 0.5;
  double a = 1.0, b = 1.0;
};

struct DataConfig {
  bool simulate = false;
  std::string path;                          // when !simulate
  std::map<std::string, double> theta;       // true parameters when simulating
  int T = 0;
  std::uint64_t seed = 0;
};

struct DiagnosticsConfig {
  int burn_in = 0;
  int acf_max_lag = 50;
  int histogram_bins = 0;  // 0 skips histogram output
  bool update_frequency = false;
  int thin = 1;
  std::string filtered = "none";  // none | state | exp-state
};

struct VariantConfig {
  std::string name;
  SamplerConfig sampler;
  std::map<std::string, double> init_params;  // named; mapped once the model exists
};

struct OutputConfig {
  std::string directory = "out";
  int chains = 1;
};

struct ExperimentConfig {
  ModelConfig model;
  DataConfig data;
  std::vector<VariantConfig> variants;  // at least one after resolution
  DiagnosticsConfig diagnostics;
  OutputConfig output;
  std::string resolved_text;  // canonical config echo, reruns byte-identically
};

// Parse + validate. Unknown keys anywhere are an error; defaults are filled
// and echoed into resolved_text. Overrides are dotted key=value pairs applied
// before validation, e.g. "sampler.num_particles=200".
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::vector<std::string>& overrides = {});

// Instantiate the configured model. For the population model, x0_mean must be
// resolved (pass first_obs when the config asked for the automatic choice).
std::unique_ptr<Ssm> build_model(const ModelConfig& mc,
                                 std::optional<double> first_obs = std::nullopt);

// Map a named parameter set to the model's canonical parameter order.
// Requires exactly the model's parameter names, no more, no fewer.
ParamDraw named_params(const Ssm& model, const std::map<std::string, double>& named);

}  // namespace margsmc
