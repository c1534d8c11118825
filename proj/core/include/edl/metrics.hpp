#pragma once

// ROC-AUC, per-class and micro-averaged F1, and working-point selection.

#include <cstdint>
#include <span>
#include <vector>

namespace edl {

/// Scores (predicted positive-class probability), binary labels and
/// per-sample uncertainty, all of equal length. Ids are optional; when
/// empty, positions stand in for ids.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<double> uncertainties;
  std::vector<std::uint64_t> ids;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t count_label(int label) const;
  std::uint64_t id_at(std::size_t i) const { return ids.empty() ? i : ids[i]; }
  /// Throws std::invalid_argument when lengths differ, the set is empty or a label is not binary.
  void validate() const;
  ScoredSet subset(std::span<const std::size_t> positions) const;
};

/// Mann-Whitney ROC-AUC with ties counted 1/2. Throws when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
double roc_auc(const ScoredSet& s);

struct F1Scores {
  double f1_pos = 0.0;
  double f1_neg = 0.0;
  double micro = 0.0;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

/// Predicted positive iff score >= threshold.
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold);

/// Per-class F1 (each class in turn taken as positive) and micro-averaged F1
/// over pooled counts. An F1 whose denominator is zero is reported as 0.
F1Scores f1_scores(std::span<const double> scores, std::span<const int> labels, double threshold);
F1Scores f1_scores(const ScoredSet& s, double threshold);
F1Scores f1_from_confusion(const ConfusionCounts& c);

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold);

/// Threshold maximizing the mean of the per-class F1 scores. Candidates are
/// the midpoints between consecutive distinct scores plus 0 and 1; ties go to
/// the candidate nearest 0.5. Fewer than two distinct scores yields 0.5.
double best_working_point(std::span<const double> scores, std::span<const int> labels);

}  // namespace edl
