#include "edl/selection.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>

namespace edl {

std::size_t floor_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

Rejection reject_by_uncertainty(std::span<const double> uncertainties, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw std::invalid_argument("reject_by_uncertainty: coverage must lie in (0, 1]");
  }
  const std::size_t n_keep = floor_count(coverage, uncertainties.size());
  if (n_keep == 0) {
    throw std::invalid_argument("reject_by_uncertainty: coverage " + std::to_string(coverage) + " keeps no samples of " +
                                std::to_string(uncertainties.size()));
  }
  std::vector<std::size_t> order(uncertainties.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return uncertainties[a] < uncertainties[b]; });

  Rejection r;
  r.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_keep));
  r.rejected.assign(order.begin() + static_cast<std::ptrdiff_t>(n_keep), order.end());
  r.u_threshold = uncertainties[order[n_keep - 1]];
  std::sort(r.kept.begin(), r.kept.end());
  std::sort(r.rejected.begin(), r.rejected.end());
  return r;
}

ScoredSet reject_by_uncertainty(const ScoredSet& s, double coverage) {
  s.validate();
  return s.subset(reject_by_uncertainty(s.uncertainties, coverage).kept);
}

CoverageReport coverage_curve(const ScoredSet& s, std::span<const double> coverages, double threshold) {
  s.validate();
  if (coverages.empty()) throw std::invalid_argument("coverage_curve: no coverage levels");
  std::vector<double> levels(coverages.begin(), coverages.end());
  std::sort(levels.begin(), levels.end(), std::greater<>());
  if (std::adjacent_find(levels.begin(), levels.end()) != levels.end()) {
    throw std::invalid_argument("coverage_curve: duplicate coverage level");
  }

  CoverageReport report;
  report.threshold = threshold;
  for (double c : levels) {
    const auto rej = reject_by_uncertainty(s.uncertainties, c);
    const auto kept = s.subset(rej.kept);
    CoverageRow row;
    row.coverage = c;
    row.u_threshold = rej.u_threshold;
    row.n_kept = kept.size();
    if (kept.count_label(1) > 0 && kept.count_label(0) > 0) row.auc = roc_auc(kept.scores, kept.labels);
    const auto f = f1_scores(kept.scores, kept.labels, threshold);
    row.f1_pos = f.f1_pos;
    row.f1_neg = f.f1_neg;
    row.micro_f1 = f.micro;
    for (auto p : rej.rejected) row.rejected_ids.push_back(s.id_at(p));
    report.rows.push_back(std::move(row));
  }
  return report;
}

IntervalRejection reject_by_probability_interval(std::span<const double> scores, double delta) {
  if (!(delta >= 0.0 && delta < 0.5)) {
    throw std::invalid_argument("reject_by_probability_interval: delta must lie in [0, 0.5)");
  }
  IntervalRejection out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 0.5 - delta || scores[i] > 0.5 + delta) out.kept.push_back(i);
  }
  out.realized_coverage =
      scores.empty() ? 0.0 : static_cast<double>(out.kept.size()) / static_cast<double>(scores.size());
  return out;
}

double delta_for_coverage(std::span<const double> scores, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw std::invalid_argument("delta_for_coverage: coverage must lie in (0, 1]");
  }
  const std::size_t n_reject = scores.size() - floor_count(coverage, scores.size());
  if (n_reject == 0) return 0.0;
  std::vector<double> distance;
  distance.reserve(scores.size());
  for (double s : scores) distance.push_back(std::abs(s - 0.5));
  std::nth_element(distance.begin(), distance.begin() + static_cast<std::ptrdiff_t>(n_reject - 1), distance.end());
  return std::min(distance[n_reject - 1], std::nextafter(0.5, 0.0));
}

std::vector<BaselineRow> baseline_comparison(std::span<const double> baseline_scores,
                                             const ScoredSet& evidential, std::span<const double> deltas,
                                             double threshold) {
  evidential.validate();
  if (baseline_scores.size() != evidential.size()) {
    throw std::invalid_argument("baseline_comparison: baseline and evidential sets differ in size");
  }
  std::vector<BaselineRow> rows;
  for (double delta : deltas) {
    const auto interval = reject_by_probability_interval(baseline_scores, delta);
    BaselineRow row;
    row.delta = delta;
    row.realized_coverage = interval.realized_coverage;
    row.n_kept = interval.kept.size();
    if (row.n_kept == 0) {
      rows.push_back(row);
      continue;
    }
    std::vector<double> kept_scores;
    std::vector<int> kept_labels;
    for (auto p : interval.kept) {
      kept_scores.push_back(baseline_scores[p]);
      kept_labels.push_back(evidential.labels[p]);
    }
    const auto fb = f1_scores(kept_scores, kept_labels, threshold);
    row.f1_pos = fb.f1_pos;
    row.f1_neg = fb.f1_neg;
    row.micro_f1 = fb.micro;

    const double matched = static_cast<double>(row.n_kept) / static_cast<double>(evidential.size());
    const auto ev_kept = evidential.subset(reject_by_uncertainty(evidential.uncertainties, matched).kept);
    const auto fe = f1_scores(ev_kept.scores, ev_kept.labels, threshold);
    row.evidential_f1_pos = fe.f1_pos;
    row.evidential_f1_neg = fe.f1_neg;
    row.evidential_micro_f1 = fe.micro;
    rows.push_back(row);
  }
  return rows;
}

BootstrapPlan bootstrap_plan(const Dataset& train, std::span<const double> uncertainties, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("bootstrap_filter: epsilon must lie in [0, 1)");
  }
  if (uncertainties.size() != train.size()) {
    throw std::invalid_argument("bootstrap_filter: one uncertainty per training sample is required");
  }
  const std::size_t n_keep = floor_count(1.0 - epsilon, train.size());
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return uncertainties[a] < uncertainties[b]; });

  std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_keep));
  std::vector<std::size_t> dropped(order.begin() + static_cast<std::ptrdiff_t>(n_keep), order.end());
  std::sort(kept.begin(), kept.end());
  std::sort(dropped.begin(), dropped.end());

  std::size_t kept_pos = 0;
  for (auto p : kept) kept_pos += train[p].label == 1 ? 1 : 0;
  if (kept_pos == 0 || kept_pos == kept.size()) {
    throw std::invalid_argument("bootstrap_filter: epsilon " + std::to_string(epsilon) +
                                " leaves a single-class training set (" + std::to_string(kept.size()) + " samples)");
  }

  BootstrapPlan plan;
  plan.epsilon = epsilon;
  for (auto p : kept) plan.kept_ids.push_back(train[p].id);
  for (auto p : dropped) plan.dropped_ids.push_back(train[p].id);
  plan.uncertainties.assign(uncertainties.begin(), uncertainties.end());
  return plan;
}

std::string to_string(BootstrapScoring s) {
  return s == BootstrapScoring::kInSample ? "in_sample" : "held_out_folds";
}

BootstrapScoring parse_bootstrap_scoring(const std::string& s) {
  if (s == "in_sample") return BootstrapScoring::kInSample;
  if (s == "held_out_folds") return BootstrapScoring::kHeldOutFolds;
  throw std::invalid_argument("unknown bootstrap scoring '" + s + "' (expected in_sample|held_out_folds)");
}

BootstrapPlan bootstrap_filter(const Dataset& train, const TrainedModel& model, double epsilon) {
  const auto ops = predict_batch(model, train);
  std::vector<double> u;
  u.reserve(ops.size());
  for (const auto& op : ops) u.push_back(op.uncertainty);
  return bootstrap_plan(train, u, epsilon);
}

std::vector<double> held_out_uncertainties(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                                           const TrainConfig& cfg, std::size_t folds) {
  if (folds < 2 || folds > train.size()) {
    throw std::invalid_argument("held_out_uncertainties: folds must lie in [2, N]");
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed ^ 0x686f6c64ULL);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> u(train.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> in_fold;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < order.size(); ++i) (i % folds == f ? in_fold : rest).push_back(order[i]);
    std::sort(in_fold.begin(), in_fold.end());
    std::sort(rest.begin(), rest.end());
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = member_seed(cfg.seed, 1000 + f);
    const auto model = fit_model(train.subset(rest), val, spec, fold_cfg);
    const auto ops = predict_batch(model, train.subset(in_fold));
    for (std::size_t i = 0; i < in_fold.size(); ++i) u[in_fold[i]] = ops[i].uncertainty;
  }
  return u;
}

MetricTriple evaluate_triple(const TrainedModel& model, const Dataset& test, double threshold) {
  const auto s = score_evidential(model, test);
  MetricTriple m;
  if (s.count_label(0) > 0 && s.count_label(1) > 0) m.auc = roc_auc(s.scores, s.labels);
  const auto f = f1_scores(s.scores, s.labels, threshold);
  m.f1_pos = f.f1_pos;
  m.f1_neg = f.f1_neg;
  return m;
}

BootstrapOutcome bootstrap_retrain(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                                   const TrainConfig& cfg, std::span<const double> epsilons, const Dataset* test,
                                   const BootstrapOptions& options, const TrainedModel* base) {
  for (double eps : epsilons) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("bootstrap_retrain: epsilon must lie in [0, 1)");
  }
  BootstrapOutcome outcome;
  outcome.base = base ? *base : fit_model(train, val, spec, cfg);
  if (test) outcome.base_metrics = evaluate_triple(outcome.base, *test, options.threshold);

  std::vector<double> u;
  if (options.scoring == BootstrapScoring::kHeldOutFolds) {
    u = held_out_uncertainties(train, val, spec, cfg, options.folds);
  } else {
    for (const auto& op : predict_batch(outcome.base, train)) u.push_back(op.uncertainty);
  }

  std::vector<BootstrapPlan> plans;
  for (double eps : epsilons) plans.push_back(bootstrap_plan(train, u, eps));

  auto retrain = [&](std::size_t i) {
    BootstrapEntry entry;
    entry.epsilon = epsilons[i];
    entry.plan = plans[i];
    if (entry.plan.dropped_ids.empty()) {
      // Nothing dropped: identical data and config reproduce the base model.
      entry.model = outcome.base;
    } else {
      std::vector<std::size_t> positions;
      std::size_t j = 0;
      for (std::size_t p = 0; p < train.size() && j < entry.plan.kept_ids.size(); ++p) {
        if (train[p].id == entry.plan.kept_ids[j]) {
          positions.push_back(p);
          ++j;
        }
      }
      entry.model = fit_model(train.subset(positions), val, spec, cfg);
    }
    if (test) entry.test_metrics = evaluate_triple(entry.model, *test, options.threshold);
    return entry;
  };

  if (options.parallel) {
    std::vector<std::future<BootstrapEntry>> jobs;
    for (std::size_t i = 0; i < epsilons.size(); ++i) jobs.push_back(std::async(std::launch::async, retrain, i));
    for (auto& job : jobs) outcome.entries.push_back(job.get());
  } else {
    for (std::size_t i = 0; i < epsilons.size(); ++i) outcome.entries.push_back(retrain(i));
  }
  return outcome;
}

ScoredSet score_evidential(const TrainedModel& model, const Dataset& d) {
  ScoredSet s;
  for (const auto& op : predict_batch(model, d)) {
    s.scores.push_back(op.prob_pos);
    s.uncertainties.push_back(op.uncertainty);
  }
  s.labels = d.labels();
  s.ids = d.ids();
  return s;
}

ScoredSet score_baseline(const TrainedModel& model, const Dataset& d) {
  ScoredSet s;
  s.scores = predict_probability_batch(model, d);
  for (double p : s.scores) s.uncertainties.push_back(1.0 - 2.0 * std::abs(p - 0.5));
  s.labels = d.labels();
  s.ids = d.ids();
  return s;
}

}  // namespace edl
