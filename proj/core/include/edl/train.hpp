#pragma once

// Minibatch training with annealed regularization and early stopping, deep
// ensembles over random subsets, and evidence-averaging prediction.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edl/data.hpp"
#include "edl/evidential.hpp"
#include "edl/net.hpp"

namespace edl {

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(const std::string& s);

struct TrainConfig {
  std::size_t epochs_max = 50;
  std::size_t batch_size = 128;
  std::size_t patience = 3;
  double lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  AnnealedWeight anneal;
  std::size_t ensemble_m = 1;
  double ensemble_subset_frac = 0.8;
  std::uint64_t seed = 0;
  /// Train ensemble members on separate threads.
  bool parallel_members = true;

  void validate() const;
};

/// Learning-rate preset tuned for large image models; synthetic tasks default to 1e-3.
inline constexpr double kImageModelLearningRate = 1e-4;

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lambda = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct MemberResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  /// Ids of the training samples this member was fit on.
  std::vector<std::uint64_t> subset_ids;
};

struct TrainedModel {
  NetworkSpec spec;
  std::vector<MemberResult> members;

  std::size_t size() const noexcept { return members.size(); }
  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seed of ensemble member `k` derived from the run seed.
std::uint64_t member_seed(std::uint64_t seed, std::size_t k);

/// Trains a single model. Validation loss is measured in eval mode at
/// lambda_max; the parameters of the best validation epoch are returned.
TrainedModel fit(const Dataset& train, const Dataset& val, const NetworkSpec& spec, const TrainConfig& cfg);

/// Trains cfg.ensemble_m members, each on its own random subset of
/// floor(frac * N) training samples drawn without replacement.
TrainedModel fit_ensemble(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                          const TrainConfig& cfg);

/// Dispatches to fit or fit_ensemble on cfg.ensemble_m.
TrainedModel fit_model(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                       const TrainConfig& cfg);

/// Member evidence averaged arithmetically, then mapped to an opinion.
BetaOpinion predict(const TrainedModel& model, std::span<const double> x);
std::vector<BetaOpinion> predict_batch(const TrainedModel& model, const Dataset& d);
Evidence average_evidence(std::span<const Evidence> members);

/// Sigmoid-head models: probability averaged across members.
std::vector<double> predict_probability_batch(const TrainedModel& model, const Dataset& d);

/// Members as checkpoint files `member_<k>.json` plus `manifest.json`.
void save_trained_model(const TrainedModel& model, const std::filesystem::path& dir,
                        const std::string& stem = "model");
TrainedModel load_trained_model(const std::filesystem::path& dir, const std::string& stem = "model");

/// CSV with columns member,epoch,train_loss,val_loss,lambda.
std::string history_csv(const TrainedModel& model);

}  // namespace edl
