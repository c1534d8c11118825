#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace edl::app {

/// Files written by a command, relative to the output directory.
using Written = std::vector<std::string>;

/// <out>/data: train.csv, val.csv, test.csv, ood.csv, provenance.json.
Written cmd_gen(const ExperimentConfig& cfg);
/// <out>/model: evidential members and manifest, history.csv, optional sigmoid baseline.
Written cmd_train(const ExperimentConfig& cfg);
/// <out>/eval: coverage report, baseline comparison, uncertainty by noise flag, summary.
Written cmd_eval(const ExperimentConfig& cfg);
/// <out>/bootstrap: per-epsilon report and plans with dropped ids.
Written cmd_bootstrap(const ExperimentConfig& cfg);

struct Quartiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

/// Linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> values);

/// group,n,mean,q25,median,q75 rows for clean (0) and flipped (1) samples.
std::string uncertainty_by_noise_csv(const Dataset& d, const std::vector<double>& u);

}  // namespace edl::app
