#pragma once

// Uncertainty-driven sample rejection at fixed coverage, the symmetric
// probability-interval baseline, and uncertainty-driven bootstrapping.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edl/data.hpp"
#include "edl/metrics.hpp"
#include "edl/train.hpp"

namespace edl {

inline constexpr double kDefaultDecisionThreshold = 0.5;

/// Coverage levels reported by default.
inline const std::vector<double> kDefaultCoverages{1.0, 0.9, 0.75, 0.5};

/// floor(fraction * n) with a small guard against representation error
/// (0.85 * 1000 must give 850).
std::size_t floor_count(double fraction, std::size_t n);

struct Rejection {
  /// Positions kept, in original order.
  std::vector<std::size_t> kept;
  /// Positions rejected, in original order.
  std::vector<std::size_t> rejected;
  /// Largest uncertainty among the kept samples.
  double u_threshold = 0.0;
};

/// Keeps the floor(coverage * N) samples with the lowest uncertainty; ties
/// are resolved by original position.
Rejection reject_by_uncertainty(std::span<const double> uncertainties, double coverage);
ScoredSet reject_by_uncertainty(const ScoredSet& s, double coverage);

struct CoverageRow {
  double coverage = 1.0;
  double u_threshold = 0.0;
  std::size_t n_kept = 0;
  /// Empty when the kept subset holds a single class.
  std::optional<double> auc;
  double f1_pos = 0.0;
  double f1_neg = 0.0;
  double micro_f1 = 0.0;
  std::vector<std::uint64_t> rejected_ids;
};

struct CoverageReport {
  double threshold = kDefaultDecisionThreshold;
  std::vector<CoverageRow> rows;
};

/// One row per coverage level, sorted by decreasing coverage.
CoverageReport coverage_curve(const ScoredSet& s, std::span<const double> coverages,
                              double threshold = kDefaultDecisionThreshold);

struct IntervalRejection {
  std::vector<std::size_t> kept;
  double realized_coverage = 0.0;
};

/// Rejects samples whose score lies in the closed interval [0.5 - delta, 0.5 + delta].
IntervalRejection reject_by_probability_interval(std::span<const double> scores, double delta);

/// Smallest delta whose interval rejection keeps at most floor(coverage * N)
/// samples (exactly that many when the scores have no ties).
double delta_for_coverage(std::span<const double> scores, double coverage);

struct BaselineRow {
  double delta = 0.0;
  double realized_coverage = 1.0;
  std::size_t n_kept = 0;
  double f1_pos = 0.0;
  double f1_neg = 0.0;
  double micro_f1 = 0.0;
  /// Uncertainty-based rejection of the evidential model at the same kept count.
  double evidential_micro_f1 = 0.0;
  double evidential_f1_pos = 0.0;
  double evidential_f1_neg = 0.0;
};

/// Sweeps delta over `deltas` on the baseline scores and, for each realized
/// coverage, evaluates uncertainty rejection of `evidential` at the same
/// number of kept samples. Both sets must describe the same samples.
std::vector<BaselineRow> baseline_comparison(std::span<const double> baseline_scores,
                                             const ScoredSet& evidential, std::span<const double> deltas,
                                             double threshold = kDefaultDecisionThreshold);

struct BootstrapPlan {
  double epsilon = 0.0;
  std::vector<std::uint64_t> kept_ids;
  std::vector<std::uint64_t> dropped_ids;
  /// Uncertainty of every sample, in dataset order.
  std::vector<double> uncertainties;
};

/// Drops the N - floor((1 - epsilon) N) highest-uncertainty samples.
/// Throws when the kept set would contain a single class.
BootstrapPlan bootstrap_plan(const Dataset& train, std::span<const double> uncertainties, double epsilon);

enum class BootstrapScoring {
  /// Uncertainty from the model evaluated on its own training data.
  kInSample,
  /// Uncertainty from models trained on the complementary folds.
  kHeldOutFolds,
};

std::string to_string(BootstrapScoring s);
BootstrapScoring parse_bootstrap_scoring(const std::string& s);

BootstrapPlan bootstrap_filter(const Dataset& train, const TrainedModel& model, double epsilon);

/// Uncertainty of every training sample predicted by a model fit on the other `folds - 1` folds.
std::vector<double> held_out_uncertainties(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                                           const TrainConfig& cfg, std::size_t folds);

/// [AUC; F1 (positive); F1 (negative)] at the decision threshold.
struct MetricTriple {
  std::optional<double> auc;
  double f1_pos = 0.0;
  double f1_neg = 0.0;
};

MetricTriple evaluate_triple(const TrainedModel& model, const Dataset& test,
                             double threshold = kDefaultDecisionThreshold);

struct BootstrapEntry {
  double epsilon = 0.0;
  BootstrapPlan plan;
  TrainedModel model;
  std::optional<MetricTriple> test_metrics;
};

struct BootstrapOptions {
  BootstrapScoring scoring = BootstrapScoring::kInSample;
  std::size_t folds = 5;
  bool parallel = false;
  double threshold = kDefaultDecisionThreshold;
};

struct BootstrapOutcome {
  TrainedModel base;
  std::optional<MetricTriple> base_metrics;
  std::vector<BootstrapEntry> entries;
};

/// Trains a base model (or uses `base` when given), filters the training
/// set for every epsilon and retrains from a fresh initialization with the
/// same configuration. Epsilon 0 reuses the base model.
BootstrapOutcome bootstrap_retrain(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                                   const TrainConfig& cfg, std::span<const double> epsilons,
                                   const Dataset* test = nullptr, const BootstrapOptions& options = {},
                                   const TrainedModel* base = nullptr);

/// ScoredSet of an evidential model on a dataset (score = expected positive probability).
ScoredSet score_evidential(const TrainedModel& model, const Dataset& d);

/// ScoredSet of a sigmoid baseline; uncertainty is set to 1 - 2 |p - 0.5|.
ScoredSet score_baseline(const TrainedModel& model, const Dataset& d);

}  // namespace edl
