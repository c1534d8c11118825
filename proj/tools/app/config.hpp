#pragma once

// Experiment configuration shared by all subcommands: a JSON document with
// one object per section, overridable field by field.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edl/data.hpp"
#include "edl/net.hpp"
#include "edl/selection.hpp"
#include "edl/train.hpp"

namespace edl::app {

/// Invalid configuration; `field` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct DataSection {
  /// "generate" or "csv".
  std::string source = "generate";
  std::size_t n = 4000;
  std::size_t dim = 2;
  /// Distance between class means; derived from bayes_auc when unset.
  std::optional<double> separation;
  double bayes_auc = 0.9;
  double flip_rate = 0.1;
  double positive_fraction = 0.5;
  std::size_t group_size = 0;
  std::vector<double> fractions{0.5, 0.125, 0.375};
  double ood_offset = 8.0;
  std::size_t ood_n = 500;
  std::string train_csv;
  std::string val_csv;
  std::string test_csv;
};

struct ModelSection {
  std::vector<std::size_t> hidden_layers{64};
  double dropout_rate = 0.0;
  EvidenceActivation evidence_activation = EvidenceActivation::kRelu;
  DropoutPlacement dropout_placement = DropoutPlacement::kAllHidden;
};

struct TrainSection {
  TrainConfig config;
  /// Also train a sigmoid-head model with the same architecture.
  bool baseline = true;
};

struct EvalSection {
  std::vector<double> coverages = kDefaultCoverages;
  double threshold = kDefaultDecisionThreshold;
  std::vector<double> deltas{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
};

struct BootstrapSection {
  std::vector<double> epsilons{0.0, 0.05, 0.1, 0.15};
  BootstrapScoring scoring = BootstrapScoring::kInSample;
  std::size_t folds = 5;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  /// Empty means: $EDL_OUTPUT_ROOT, else ./edl_out.
  std::string out;
  DataSection data;
  ModelSection model;
  TrainSection train;
  EvalSection eval;
  BootstrapSection bootstrap;

  /// Checks every field; throws ConfigError naming the first invalid one.
  void validate() const;

  double separation() const;
  GaussianOverlapConfig generator() const;
  SplitFractions split() const;
  NetworkSpec network(std::size_t input_dim) const;
  TrainConfig train_config() const;

  std::filesystem::path data_dir() const { return std::filesystem::path(out) / "data"; }
  std::filesystem::path model_dir() const { return std::filesystem::path(out) / "model"; }
  std::filesystem::path eval_dir() const { return std::filesystem::path(out) / "eval"; }
  std::filesystem::path bootstrap_dir() const { return std::filesystem::path(out) / "bootstrap"; }
  std::filesystem::path train_path() const;
  std::filesystem::path val_path() const;
  std::filesystem::path test_path() const;
};

struct FieldDoc {
  std::string name;
  std::string type;
  std::string default_value;
  std::string help;
};

/// Every configurable field with its type, default and description.
std::vector<FieldDoc> field_docs();

/// Applies a JSON document on top of `cfg`; unknown keys are errors.
void apply_json(ExperimentConfig& cfg, const std::string& text, const std::string& origin);
/// Applies one `section.key=value` override. The value is read as JSON
/// when it parses, otherwise as a bare string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

ExperimentConfig load_config(const std::filesystem::path& path);
/// The effective configuration as JSON (same layout as the config file).
std::string to_json(const ExperimentConfig& cfg);

}  // namespace edl::app
