#include "edl/selection.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "edl/report_io.hpp"

namespace edl {
namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

TEST(FloorCount, RepresentationGuard) {
  EXPECT_EQ(floor_count(0.85, 1000), 850u);
  EXPECT_EQ(floor_count(0.9, 10), 9u);
  EXPECT_EQ(floor_count(0.75, 4), 3u);
  EXPECT_EQ(floor_count(0.999, 10), 9u);
}

TEST(RejectByUncertainty, Examples) {
  const std::vector<double> u{0.9, 0.2, 0.5, 0.1};
  EXPECT_EQ(reject_by_uncertainty(u, 1.0).kept, iota(4));
  const auto half = reject_by_uncertainty(u, 0.5);
  EXPECT_EQ(half.kept, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(half.rejected, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(half.u_threshold, 0.2);
  EXPECT_EQ(reject_by_uncertainty(u, 0.75).kept, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(RejectByUncertainty, Errors) {
  const std::vector<double> u{0.9, 0.2, 0.5, 0.1};
  EXPECT_THROW(reject_by_uncertainty(u, 0.2), std::invalid_argument);
  EXPECT_THROW(reject_by_uncertainty(u, 0.0), std::invalid_argument);
  EXPECT_THROW(reject_by_uncertainty(u, 1.1), std::invalid_argument);
}

TEST(RejectByUncertainty, StableTies) {
  const std::vector<double> u(10, 0.3);
  EXPECT_EQ(reject_by_uncertainty(u, 0.5).kept, iota(5));
}

TEST(RejectByUncertainty, NestedKeptSets) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u(97);
    for (auto& v : u) v = level(rng) / 5.0;
    std::vector<std::set<std::size_t>> kept;
    for (double c : {0.3, 0.5, 0.75, 0.9, 1.0}) {
      const auto k = reject_by_uncertainty(u, c).kept;
      kept.emplace_back(k.begin(), k.end());
    }
    for (std::size_t i = 1; i < kept.size(); ++i)
      EXPECT_TRUE(std::includes(kept[i].begin(), kept[i].end(), kept[i - 1].begin(), kept[i - 1].end()));
  }
}

ScoredSet sample_set() {
  return ScoredSet{{0.9, 0.1, 0.8, 0.4, 0.6, 0.3, 0.7, 0.2},
                   {1, 0, 1, 1, 0, 0, 1, 0},
                   {0.1, 0.1, 0.2, 0.9, 0.8, 0.3, 0.2, 0.4},
                   {10, 11, 12, 13, 14, 15, 16, 17}};
}

TEST(CoverageCurve, RowsAndRejectedIds) {
  const std::vector<double> coverages{0.5, 1.0, 0.75};
  const auto report = coverage_curve(sample_set(), coverages);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[0].coverage, 1.0);
  EXPECT_EQ(report.rows[1].coverage, 0.75);
  EXPECT_EQ(report.rows[2].coverage, 0.5);
  EXPECT_EQ(report.rows[0].n_kept, 8u);
  EXPECT_EQ(report.rows[1].n_kept, 6u);
  EXPECT_EQ(report.rows[2].n_kept, 4u);
  EXPECT_EQ(report.rows[1].rejected_ids, (std::vector<std::uint64_t>{13, 14}));
  EXPECT_EQ(report.rows[2].rejected_ids, (std::vector<std::uint64_t>{13, 14, 15, 17}));
  EXPECT_NEAR(*report.rows[0].auc, 0.9375, 1e-15);
  EXPECT_EQ(*report.rows[1].auc, 1.0);
  EXPECT_EQ(report.rows[1].micro_f1, 1.0);
  EXPECT_EQ(report.rows[0].micro_f1, 0.75);
}

TEST(CoverageCurve, SingleClassRowHasNoAuc) {
  const ScoredSet s{{0.9, 0.8, 0.1}, {1, 1, 0}, {0.1, 0.2, 0.9}, {}};
  const std::vector<double> c{1.0, 0.67};
  const auto report = coverage_curve(s, c);
  EXPECT_TRUE(report.rows[0].auc.has_value());
  EXPECT_FALSE(report.rows[1].auc.has_value());
  EXPECT_EQ(report.rows[1].f1_pos, 1.0);
}

TEST(CoverageCurve, ConstantUncertaintyKeepsPrefix) {
  auto s = sample_set();
  std::fill(s.uncertainties.begin(), s.uncertainties.end(), 0.5);
  const auto report = coverage_curve(s, kDefaultCoverages);
  EXPECT_EQ(report.rows[3].rejected_ids, (std::vector<std::uint64_t>{14, 15, 16, 17}));
}

TEST(CoverageCurve, Errors) {
  const std::vector<double> dup{0.5, 0.5};
  EXPECT_THROW(coverage_curve(sample_set(), dup), std::invalid_argument);
  const std::vector<double> bad{0.0};
  EXPECT_THROW(coverage_curve(sample_set(), bad), std::invalid_argument);
}

TEST(CoverageReportIo, JsonRoundTripAndCsv) {
  const auto report = coverage_curve(sample_set(), kDefaultCoverages);
  const auto json = coverage_report_json(report);
  const auto back = coverage_report_from_json(json);
  ASSERT_EQ(back.rows.size(), report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].coverage, report.rows[i].coverage);
    EXPECT_EQ(back.rows[i].auc, report.rows[i].auc);
    EXPECT_EQ(back.rows[i].rejected_ids, report.rows[i].rejected_ids);
    EXPECT_EQ(back.rows[i].micro_f1, report.rows[i].micro_f1);
  }
  EXPECT_EQ(coverage_report_json(back), json);
  const auto csv = coverage_report_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "coverage,u_threshold,n_kept,auc,f1_pos,f1_neg,micro_f1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(ProbabilityInterval, Examples) {
  const std::vector<double> s{0.1, 0.45, 0.55, 0.9};
  EXPECT_EQ(reject_by_probability_interval(s, 0.1).kept, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(reject_by_probability_interval(s, 0.1).realized_coverage, 0.5);
  const std::vector<double> with_half{0.5, 0.2, 0.5000001};
  EXPECT_EQ(reject_by_probability_interval(with_half, 0.0).kept, (std::vector<std::size_t>{1, 2}));
  const std::vector<double> edges{0.0, 1.0, 0.01, 0.99, 0.5};
  EXPECT_EQ(reject_by_probability_interval(edges, 0.495).kept, (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(reject_by_probability_interval(s, 0.5), std::invalid_argument);
  EXPECT_THROW(reject_by_probability_interval(s, -0.1), std::invalid_argument);
}

TEST(ProbabilityInterval, DeltaForCoverage) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(400);
  for (auto& v : s) v = u(rng);
  for (double c : {0.9, 0.75, 0.5, 0.25}) {
    const double d = delta_for_coverage(s, c);
    EXPECT_EQ(reject_by_probability_interval(s, d).kept.size(), floor_count(c, s.size())) << c;
  }
  EXPECT_EQ(delta_for_coverage(s, 1.0), 0.0);
}

TEST(BaselineComparison, MatchedKeptCounts) {
  const auto evid = sample_set();
  const std::vector<double> baseline{0.95, 0.05, 0.52, 0.45, 0.7, 0.35, 0.9, 0.48};
  const std::vector<double> deltas{0.0, 0.05, 0.2};
  const auto rows = baseline_comparison(baseline, evid, deltas);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].n_kept, 8u);
  EXPECT_EQ(rows[1].n_kept, 5u);
  EXPECT_EQ(rows[1].realized_coverage, 5.0 / 8.0);
  EXPECT_EQ(rows[2].n_kept, 3u);
  for (const auto& r : rows) {
    const auto kept = reject_by_uncertainty(evid.uncertainties, std::min(1.0, r.realized_coverage + 1e-12)).kept;
    EXPECT_EQ(kept.size(), r.n_kept);
  }
  EXPECT_EQ(rows[1].evidential_micro_f1, 1.0);
  const std::vector<double> short_scores{0.1};
  EXPECT_THROW(baseline_comparison(short_scores, evid, deltas), std::invalid_argument);
  const auto csv = baseline_comparison_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

Dataset tiny_dataset() {
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < 20; ++i)
    samples.push_back({i + 100, {static_cast<double>(i)}, static_cast<int>(i % 2), std::nullopt, std::nullopt});
  return Dataset(std::move(samples), 1);
}

TEST(BootstrapPlan, PartitionAndCounts) {
  const auto d = tiny_dataset();
  std::vector<double> u(20);
  for (std::size_t i = 0; i < 20; ++i) u[i] = static_cast<double>((i * 7) % 20) / 20.0;
  const auto plan = bootstrap_plan(d, u, 0.15);
  EXPECT_EQ(plan.kept_ids.size(), 17u);
  EXPECT_EQ(plan.dropped_ids.size(), 3u);
  std::set<std::uint64_t> all(plan.kept_ids.begin(), plan.kept_ids.end());
  all.insert(plan.dropped_ids.begin(), plan.dropped_ids.end());
  EXPECT_EQ(all.size(), 20u);
  double max_kept = 0.0, min_dropped = 1.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto id = d[i].id;
    if (std::count(plan.dropped_ids.begin(), plan.dropped_ids.end(), id)) min_dropped = std::min(min_dropped, u[i]);
    else max_kept = std::max(max_kept, u[i]);
  }
  EXPECT_LE(max_kept, min_dropped);
  const auto back = bootstrap_plan_from_json(bootstrap_plan_json(plan));
  EXPECT_EQ(back.kept_ids, plan.kept_ids);
  EXPECT_EQ(back.dropped_ids, plan.dropped_ids);
  EXPECT_EQ(back.uncertainties, plan.uncertainties);
}

TEST(BootstrapPlan, PaperScaleCount) {
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < 1000; ++i)
    samples.push_back({i, {0.0}, static_cast<int>(i % 2), std::nullopt, std::nullopt});
  const Dataset d(std::move(samples), 1);
  const std::vector<double> u(1000, 0.4);
  const auto plan = bootstrap_plan(d, u, 0.15);
  EXPECT_EQ(plan.kept_ids.size(), 850u);
  for (std::uint64_t i = 0; i < 850; ++i) EXPECT_EQ(plan.kept_ids[i], i);
}

TEST(BootstrapPlan, SingleClassKeptIsAnError) {
  const auto d = tiny_dataset();
  std::vector<double> u(20);
  for (std::size_t i = 0; i < 20; ++i) u[i] = i % 2 == 0 ? 0.9 : 0.1;
  EXPECT_THROW(bootstrap_plan(d, u, 0.5), std::invalid_argument);
  EXPECT_THROW(bootstrap_plan(d, u, 1.0), std::invalid_argument);
}

Dataset noisy(std::size_t n, std::uint64_t seed) {
  GaussianOverlapConfig cfg;
  cfg.n = n;
  cfg.separation = 3.0;
  cfg.flip_rate = 0.1;
  return gen_gaussian_overlap(cfg, seed);
}

TEST(BootstrapRetrain, EpsilonZeroReusesBaseAndOthersRetrain) {
  const auto train = noisy(300, 1);
  const auto val = noisy(100, 2);
  const auto test = noisy(200, 3);
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_layers = {8};
  TrainConfig cfg;
  cfg.epochs_max = 3;
  cfg.batch_size = 32;
  cfg.lr = 1e-2;
  const std::vector<double> eps{0.0, 0.05, 0.1};
  const auto out = bootstrap_retrain(train, val, spec, cfg, eps, &test);
  ASSERT_EQ(out.entries.size(), 3u);
  ASSERT_TRUE(out.base_metrics.has_value());
  EXPECT_TRUE(out.entries[0].plan.dropped_ids.empty());
  EXPECT_EQ(out.entries[0].test_metrics->auc, out.base_metrics->auc);
  EXPECT_EQ(out.entries[0].test_metrics->f1_pos, out.base_metrics->f1_pos);
  EXPECT_EQ(out.entries[1].plan.kept_ids.size(), 285u);
  EXPECT_EQ(out.entries[2].plan.kept_ids.size(), 270u);
  auto kept = out.entries[2].plan.kept_ids;
  auto fitted = out.entries[2].model.members[0].subset_ids;
  std::sort(kept.begin(), kept.end());
  std::sort(fitted.begin(), fitted.end());
  EXPECT_EQ(fitted, kept);
  // Deterministic across runs.
  const auto again = bootstrap_retrain(train, val, spec, cfg, eps, &test);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(again.entries[i].plan.dropped_ids, out.entries[i].plan.dropped_ids);
    EXPECT_TRUE(again.entries[i].model.members[0].params == out.entries[i].model.members[0].params);
  }
}

TEST(HeldOutUncertainties, CoversEverySample) {
  const auto train = noisy(200, 4);
  const auto val = noisy(60, 5);
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_layers = {8};
  TrainConfig cfg;
  cfg.epochs_max = 2;
  cfg.batch_size = 32;
  const auto u = held_out_uncertainties(train, val, spec, cfg, 4);
  ASSERT_EQ(u.size(), train.size());
  for (double v : u) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(held_out_uncertainties(train, val, spec, cfg, 1), std::invalid_argument);
}

TEST(ScoreBaseline, UncertaintyFromDistanceToHalf) {
  NetworkSpec spec;
  spec.input_dim = 1;
  spec.head = HeadKind::kSigmoid;
  TrainedModel model{spec, {}};
  MemberResult m;
  m.params = init_params(spec, 1);
  m.params.layers[0].weights(0, 0) = 1.0;
  model.members.push_back(m);
  std::vector<Sample> samples{{0, {0.0}, 1, {}, {}}, {1, {3.0}, 0, {}, {}}};
  const Dataset d(std::move(samples), 1);
  const auto s = score_baseline(model, d);
  EXPECT_DOUBLE_EQ(s.uncertainties[0], 1.0);
  EXPECT_NEAR(s.uncertainties[1], 1.0 - 2.0 * std::abs(1.0 / (1.0 + std::exp(-3.0)) - 0.5), 1e-15);
}

}  // namespace
}  // namespace edl
