#pragma once

#include <Eigen/Dense>

#include "margsmc/config.hpp"

namespace margsmc {

// Observations for the configured experiment: simulated with the configured
// true parameters, or loaded from the configured CSV path.
Eigen::VectorXd resolve_observations(const ExperimentConfig& cfg);

// Runs every variant (per chain when output.chains > 1) and writes the
// artifact files into output.directory: resolved_config.json,
// observations.csv, samples.csv, acf.csv, summary.json, plus
// update_frequency.csv / filtered.csv / histogram CSVs when configured.
void run_experiment(const ExperimentConfig& cfg);

// `simulate` subcommand: writes observations.csv and states.csv only.
void run_simulate(const ExperimentConfig& cfg);

}  // namespace margsmc
