#include "edl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace edl {
namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels, const char* fn) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument(std::string(fn) + ": scores and labels differ in length");
  }
  if (scores.empty()) throw std::invalid_argument(std::string(fn) + ": empty input");
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

std::size_t ScoredSet::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void ScoredSet::validate() const {
  if (scores.empty()) throw std::invalid_argument("ScoredSet: empty");
  if (labels.size() != scores.size() || uncertainties.size() != scores.size()) {
    throw std::invalid_argument("ScoredSet: scores, labels and uncertainties must have equal length");
  }
  if (!ids.empty() && ids.size() != scores.size()) {
    throw std::invalid_argument("ScoredSet: ids must be empty or match the number of scores");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("ScoredSet: labels must be 0 or 1");
  }
}

ScoredSet ScoredSet::subset(std::span<const std::size_t> positions) const {
  ScoredSet out;
  out.scores.reserve(positions.size());
  out.labels.reserve(positions.size());
  out.uncertainties.reserve(positions.size());
  out.ids.reserve(positions.size());
  for (auto p : positions) {
    out.scores.push_back(scores.at(p));
    out.labels.push_back(labels.at(p));
    out.uncertainties.push_back(uncertainties.at(p));
    out.ids.push_back(id_at(p));
  }
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "roc_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Rank sum of positives with average ranks over tied runs. Ranks are kept
  // doubled so every quantity stays integral.
  std::uint64_t doubled_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_avg_rank = (i + 1) + j;  // 2 * mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        doubled_rank_sum += doubled_avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: both classes must be present");
  // 2U = 2 R+ - n+(n+ + 1)
  const std::uint64_t doubled_u = doubled_rank_sum - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc(const ScoredSet& s) {
  s.validate();
  return roc_auc(s.scores, s.labels);
}

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores, labels, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

F1Scores f1_from_confusion(const ConfusionCounts& c) {
  F1Scores out;
  out.f1_pos = f1(c.tp, c.fp, c.fn);
  out.f1_neg = f1(c.tn, c.fn, c.fp);
  // Pooled over both classes: TP = tp + tn, FP = FN = fp + fn.
  out.micro = f1(c.tp + c.tn, c.fp + c.fn, c.fn + c.fp);
  return out;
}

F1Scores f1_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("f1_scores: threshold must lie in [0, 1]");
  }
  return f1_from_confusion(confusion(scores, labels, threshold));
}

F1Scores f1_scores(const ScoredSet& s, double threshold) {
  s.validate();
  return f1_scores(s.scores, s.labels, threshold);
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  const auto c = confusion(scores, labels, threshold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
}

double best_working_point(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "best_working_point");
  std::vector<double> unique(scores.begin(), scores.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() < 2) return 0.5;

  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t i = 0; i + 1 < unique.size(); ++i) candidates.push_back(0.5 * (unique[i] + unique[i + 1]));

  double best = 0.5;
  double best_score = -1.0;
  for (double t : candidates) {
    const auto f = f1_scores(scores, labels, t);
    const double mean = 0.5 * (f.f1_pos + f.f1_neg);
    if (mean > best_score || (mean == best_score && std::abs(t - 0.5) < std::abs(best - 0.5))) {
      best_score = mean;
      best = t;
    }
  }
  return best;
}

}  // namespace edl
