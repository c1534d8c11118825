// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed criterion numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edl/evidential.hpp"
#include "edl/metrics.hpp"
#include "edl/net.hpp"
#include "edl/selection.hpp"
#include "edl/specfun.hpp"
#include "edl/train.hpp"
#include "oracles.hpp"

namespace {

using namespace edl;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr int kSeeds = 5;

// ---------------------------------------------------------------- 1

Outcome special_functions() {
  using namespace specfun;
  double worst_lgamma = 0.0;
  long double log_fact = 0.0L;
  for (int n = 1; n <= 100; ++n) {
    // ln Gamma(n + 1) = ln n!
    log_fact += std::log(static_cast<long double>(n));
    worst_lgamma = std::max(worst_lgamma, std::abs(log_gamma(n + 1.0) - static_cast<double>(log_fact)));
  }
  worst_lgamma = std::max(worst_lgamma, std::abs(log_gamma(0.5) - 0.5 * std::log(std::numbers::pi)));

  const double pi2 = std::numbers::pi * std::numbers::pi;
  double worst_digamma = 0.0;
  worst_digamma = std::max(worst_digamma, std::abs(digamma(1.0) + kEulerGamma));
  worst_digamma = std::max(worst_digamma, std::abs(digamma(0.5) + kEulerGamma + 2.0 * std::numbers::ln2));
  double harmonic = 0.0;
  for (int n = 1; n <= 50; ++n) {
    harmonic += 1.0 / n;
    worst_digamma = std::max(worst_digamma, std::abs(digamma(n + 1.0) - (harmonic - kEulerGamma)));
  }

  double worst_trigamma = 0.0;
  worst_trigamma = std::max(worst_trigamma, std::abs(trigamma(1.0) - pi2 / 6.0));
  worst_trigamma = std::max(worst_trigamma, std::abs(trigamma(0.5) - pi2 / 2.0));
  worst_trigamma = std::max(worst_trigamma, std::abs(trigamma(2.0) - (pi2 / 6.0 - 1.0)));

  double worst_kl = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double a = 1.0 + 49.0 * i / 9.0;
      const double b = 1.0 + 49.0 * j / 9.0;
      worst_kl = std::max(worst_kl, std::abs(beta_kl_to_uniform({a, b}) - oracle::beta_kl_quadrature(a, b)));
    }
  }
  const bool pass = worst_lgamma <= 1e-12 && worst_digamma <= 1e-10 && worst_trigamma <= 1e-8 && worst_kl <= 1e-6;
  return {pass, "max abs err lgamma " + fmt("%.2e", worst_lgamma) + " (<=1e-12), digamma " +
                    fmt("%.2e", worst_digamma) + " (<=1e-10), trigamma " + fmt("%.2e", worst_trigamma) +
                    " (<=1e-8), KL vs quadrature on 10x10 grid " + fmt("%.2e", worst_kl) + " (<=1e-6)"};
}

// ---------------------------------------------------------------- 2

Outcome loss_identity() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> param(1.0, 20.0);
  double worst_z = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double a = param(rng);
    const double b = param(rng);
    const int y = static_cast<int>(rng() % 2);
    const double closed = data_loss(opinion_from_params(a, b), LabeledTarget(y));
    const auto mc = oracle::data_loss_monte_carlo(a, b, y, 1'000'000, rng());
    worst_z = std::max(worst_z, std::abs(closed - mc.mean) / mc.std_error);
  }
  double worst_reg = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double a = param(rng);
    const double b = param(rng);
    const int y = static_cast<int>(rng() % 2);
    const auto op = opinion_from_params(a, b);
    for (auto mode : {RegularizerMode::kLiteral, RegularizerMode::kMisleading}) {
      const bool keep_alpha = (mode == RegularizerMode::kLiteral) == (y == 1);
      const double ref = keep_alpha ? oracle::beta_kl_quadrature(a, 1.0) : oracle::beta_kl_quadrature(1.0, b);
      worst_reg = std::max(worst_reg, std::abs(reg_loss(op, LabeledTarget(y), mode) - ref));
    }
  }
  return {worst_z <= 3.0 && worst_reg <= 1e-6,
          "data_loss vs Monte Carlo (1e6 draws, 20 triples) max |z| " + fmt("%.2f", worst_z) +
              " (<=3); reg_loss vs quadrature max abs err " + fmt("%.2e", worst_reg) + " (<=1e-6)"};
}

// ---------------------------------------------------------------- 3

Outcome gradients() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ev(0.0, 30.0);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  double worst_ev = 0.0;
  for (int t = 0; t < 100; ++t) {
    AnnealedWeight w;
    w.lambda_now = lam(rng);
    w.mode = t % 2 == 0 ? RegularizerMode::kLiteral : RegularizerMode::kMisleading;
    const Evidence e{ev(rng), ev(rng)};
    const LabeledTarget y(static_cast<int>(rng() % 2));
    const auto g = loss_gradient_wrt_evidence(e, y, w);
    const double h = 1e-5;
    const double fp = oracle::central_difference([&](double v) { return sample_loss({v, e.neg}, y, w); }, e.pos, h);
    const double fn = oracle::central_difference([&](double v) { return sample_loss({e.pos, v}, y, w); }, e.neg, h);
    worst_ev = std::max({worst_ev, oracle::relative_error(g.d_pos, fp, 1e-6), oracle::relative_error(g.d_neg, fn, 1e-6)});
  }

  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_layers = {8};
  spec.evidence_activation = EvidenceActivation::kSoftplus;
  std::normal_distribution<double> normal(0.0, 1.5);
  double worst_net = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto params = init_params(spec, 1000 + static_cast<std::uint64_t>(t));
    for (auto& layer : params.layers) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.2 * normal(rng);
    }
    Eigen::MatrixXd x(16, 2);
    std::vector<int> y(16);
    const auto& hidden = params.layers.front();
    for (Eigen::Index r = 0; r < 16; ++r) {
      // Redraw samples whose hidden pre-activations sit on the ReLU kink.
      do {
        x(r, 0) = normal(rng);
        x(r, 1) = normal(rng);
      } while ((hidden.weights * x.row(r).transpose() + hidden.bias).cwiseAbs().minCoeff() < 1e-2);
      y[static_cast<std::size_t>(r)] = static_cast<int>(rng() % 2);
    }
    AnnealedWeight w;
    w.lambda_now = lam(rng);
    w.mode = t % 2 == 0 ? RegularizerMode::kLiteral : RegularizerMode::kMisleading;
    const auto lg = backward(params, x, y, w);
    std::vector<double> analytic;
    for (const auto& g : lg.gradient) {
      for (Eigen::Index r = 0; r < g.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < g.weights.cols(); ++c) analytic.push_back(g.weights(r, c));
      for (Eigen::Index r = 0; r < g.bias.size(); ++r) analytic.push_back(g.bias(r));
    }
    const auto base = params.flatten();
    auto probe = params;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double fd = oracle::central_difference(
          [&](double v) {
            auto values = base;
            values[i] = v;
            probe.assign_flat(values);
            return batch_loss(probe, x, y, w);
          },
          base[i], 1e-4);
      worst_net = std::max(worst_net, oracle::relative_error(analytic[i], fd, 1e-6));
    }
  }
  return {worst_ev <= 1e-4 && worst_net <= 1e-4,
          "max relative error: evidence level " + fmt("%.2e", worst_ev) + ", 2-8-2 softplus backprop " +
              fmt("%.2e", worst_net) + " (<=1e-4, 100 points each)"};
}

// ---------------------------------------------------------------- 4

Outcome opinion_algebra() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    // Magnitudes spanning 1e-6 .. 1e6.
    const Evidence e{std::pow(10.0, 12.0 * unit(rng) - 6.0), std::pow(10.0, 12.0 * unit(rng) - 6.0)};
    const auto op = opinion_from_evidence(e);
    worst = std::max({worst, std::abs(op.belief_pos + op.belief_neg + op.uncertainty - 1.0),
                      std::abs(op.prob_pos + op.prob_neg - 1.0),
                      std::abs(op.uncertainty - 2.0 / (op.alpha + op.beta))});
  }
  return {worst <= 1e-12, "max identity violation over 1e4 evidence pairs " + fmt("%.2e", worst) + " (<=1e-12)"};
}

// ---------------------------------------------------------------- 5, 6, 8, 9

// Reference experiment: two 16-dimensional unit Gaussians whose means differ
// along one axis only, one 512-unit softplus hidden layer.
GaussianOverlapConfig experiment_data(std::size_t n, double flip_rate) {
  GaussianOverlapConfig c;
  c.n = n;
  c.dim = 16;
  c.separation = separation_for_bayes_auc(0.90);
  c.flip_rate = flip_rate;
  return c;
}

NetworkSpec experiment_spec() {
  NetworkSpec s;
  s.input_dim = 16;
  s.hidden_layers = {512};
  s.evidence_activation = EvidenceActivation::kSoftplus;
  return s;
}

TrainConfig experiment_train(std::uint64_t seed) {
  TrainConfig t;
  t.epochs_max = 100;
  t.batch_size = 128;
  t.patience = 3;
  t.lr = 1e-2;
  t.seed = seed;
  t.anneal.mode = RegularizerMode::kMisleading;
  return t;
}

struct Splits {
  Dataset train, val, test;
};

Splits experiment_splits(int seed, double flip_rate) {
  const auto s = static_cast<std::uint64_t>(seed);
  return {gen_gaussian_overlap(experiment_data(2000, flip_rate), 1000 + 3 * s),
          gen_gaussian_overlap(experiment_data(500, flip_rate), 1001 + 3 * s),
          gen_gaussian_overlap(experiment_data(1000, flip_rate), 1002 + 3 * s)};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct TrendResults {
  std::array<double, 4> auc{};  // coverage 1.0, 0.9, 0.75, 0.5
  double u_flipped_minus_clean = 0.0;
  double f1_evidential = 0.0;
  double f1_interval = 0.0;
  double realized_coverage = 0.0;
  double u_ood = 0.0;
  double u_in = 0.0;
  double seconds_trend = 0.0;
};

const TrendResults& trend_experiment() {
  static const TrendResults r = [] {
    TrendResults out;
    double seconds = 0.0;
    for (int seed = 0; seed < kSeeds; ++seed) {
      const auto start = std::chrono::steady_clock::now();
      const auto d = experiment_splits(seed, 0.10);
      const auto model = fit(d.train, d.val, experiment_spec(), experiment_train(static_cast<std::uint64_t>(seed)));
      const auto scored = score_evidential(model, d.test);
      const auto report = coverage_curve(scored, kDefaultCoverages);
      for (std::size_t i = 0; i < 4; ++i) out.auc[i] += *report.rows[i].auc / kSeeds;
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      const auto train_scored = score_evidential(model, d.train);
      std::vector<double> flipped, clean;
      for (std::size_t i = 0; i < d.train.size(); ++i) {
        (*d.train[i].noise_flag == 1 ? flipped : clean).push_back(train_scored.uncertainties[i]);
      }
      out.u_flipped_minus_clean += (mean_of(flipped) - mean_of(clean)) / kSeeds;

      auto bspec = experiment_spec();
      bspec.head = HeadKind::kSigmoid;
      const auto baseline = fit(d.train, d.val, bspec, experiment_train(static_cast<std::uint64_t>(seed)));
      const auto bscored = score_baseline(baseline, d.test);
      const std::vector<double> delta{delta_for_coverage(bscored.scores, 0.75)};
      const auto row = baseline_comparison(bscored.scores, scored, delta).front();
      out.f1_evidential += row.evidential_micro_f1 / kSeeds;
      out.f1_interval += row.micro_f1 / kSeeds;
      out.realized_coverage += row.realized_coverage / kSeeds;

      const auto probe = gen_ood_probe(d.train, 8.0, 500, 5000 + static_cast<std::uint64_t>(seed));
      out.u_ood += mean_of(score_evidential(model, probe).uncertainties) / kSeeds;
      out.u_in += mean_of(scored.uncertainties) / kSeeds;
    }
    out.seconds_trend = seconds;
    return out;
  }();
  return r;
}

Outcome rejection_trend() {
  const auto& r = trend_experiment();
  const double gain = r.auc[3] - r.auc[0];
  // Rising coverage 0.5 -> 0.75 -> 0.9 -> 1.0 must not raise AUC by more than 0.01 per step.
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < 4; ++i) monotone = monotone && r.auc[i] <= r.auc[i + 1] + 0.01;
  return {gain >= 0.02 && monotone && r.seconds_trend <= 120.0,
          "mean AUC at coverage 100/90/75/50%: " + fmt("%.4f", r.auc[0]) + " " + fmt("%.4f", r.auc[1]) + " " +
              fmt("%.4f", r.auc[2]) + " " + fmt("%.4f", r.auc[3]) + "; gain " + fmt("%+.4f", gain) +
              " (>=+0.02); monotone within 0.01: " + (monotone ? "yes" : "no") + "; runtime " +
              fmt("%.1f", r.seconds_trend) + " s (<=120)"};
}

Outcome noisy_label_separation() {
  const auto& r = trend_experiment();
  return {r.u_flipped_minus_clean >= 0.05,
          "mean u(flipped) - mean u(clean) on training samples " + fmt("%+.4f", r.u_flipped_minus_clean) + " (>=0.05)"};
}

Outcome baseline_contrast() {
  const auto& r = trend_experiment();
  return {r.f1_evidential >= r.f1_interval,
          "micro-F1 at realized coverage " + fmt("%.3f", r.realized_coverage) + ": uncertainty rejection " +
              fmt("%.4f", r.f1_evidential) + " vs probability interval " + fmt("%.4f", r.f1_interval) + " (>=)"};
}

Outcome ood_uncertainty() {
  const auto& r = trend_experiment();
  const double margin = r.u_ood - r.u_in;
  return {margin >= 0.1, "mean u on +8 sigma probe " + fmt("%.4f", r.u_ood) + " vs in-distribution " +
                             fmt("%.4f", r.u_in) + "; margin " + fmt("%+.4f", margin) + " (>=0.1)"};
}

// ---------------------------------------------------------------- 7

Outcome bootstrapping_trend() {
  double gain = 0.0;
  double ratio = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto d = experiment_splits(seed, 0.15);
    const auto cfg = experiment_train(static_cast<std::uint64_t>(seed));
    const std::vector<double> eps{0.15};
    const auto out = bootstrap_retrain(d.train, d.val, experiment_spec(), cfg, eps, &d.test);
    const auto& entry = out.entries.front();
    gain += (*entry.test_metrics->auc - *out.base_metrics->auc) / kSeeds;

    std::set<std::uint64_t> flipped;
    for (const auto& s : d.train.samples()) {
      if (*s.noise_flag == 1) flipped.insert(s.id);
    }
    std::size_t dropped_flipped = 0;
    for (auto id : entry.plan.dropped_ids) dropped_flipped += flipped.count(id);
    const double prevalence = static_cast<double>(flipped.size()) / static_cast<double>(d.train.size());
    const double share = static_cast<double>(dropped_flipped) / static_cast<double>(entry.plan.dropped_ids.size());
    ratio += share / prevalence / kSeeds;
  }
  return {gain >= 0.01 && ratio >= 1.5, "test AUC gain of D_0.15 retrain over base " + fmt("%+.4f", gain) +
                                            " (>=+0.01); flipped share among dropped / prevalence " +
                                            fmt("%.3f", ratio) + " (>=1.5)"};
}

// ---------------------------------------------------------------- 10

Outcome metrics_oracle() {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> size(2, 200);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> level(0, 20);
  int auc_mismatch = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = size(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Half the sets use a coarse grid so ties occur.
      s[i] = t % 2 == 0 ? level(rng) / 20.0 : unit(rng);
      y[i] = unit(rng) < 0.5 ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    if (roc_auc(s, y) != oracle::auc_pair_counting(s, y)) ++auc_mismatch;
  }
  double worst_f1 = 0.0;
  for (int t = 0; t < 1000; ++t) {
    // Random confusion matrix realized as scores 0.9 / 0.1 and labels.
    const int tp = static_cast<int>(unit(rng) * 50), fp = static_cast<int>(unit(rng) * 50);
    const int tn = static_cast<int>(unit(rng) * 50), fn = static_cast<int>(unit(rng) * 50);
    std::vector<double> s;
    std::vector<int> y;
    const auto add = [&](int count, double score, int label) {
      for (int i = 0; i < count; ++i) {
        s.push_back(score);
        y.push_back(label);
      }
    };
    add(tp, 0.9, 1);
    add(fp, 0.9, 0);
    add(tn, 0.1, 0);
    add(fn, 0.1, 1);
    if (s.empty()) continue;
    const double acc = static_cast<double>(tp + tn) / static_cast<double>(s.size());
    worst_f1 = std::max(worst_f1, std::abs(f1_scores(s, y, 0.5).micro - acc));
  }
  return {auc_mismatch == 0 && worst_f1 <= 1e-15,
          "roc_auc != pair counting on " + std::to_string(auc_mismatch) +
              " of 50 sets (exact); max |micro-F1 - accuracy| over 1000 confusions " + fmt("%.1e", worst_f1)};
}

// ---------------------------------------------------------------- 11

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files[entry.path().lexically_relative(root).generic_string()] = read_bytes(entry.path());
  }
  return files;
}

Outcome cli_determinism() {
  const fs::path work = fs::temp_directory_path() / "edl_acceptance_cli";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string sets =
      " --set data.n=1200 --set model.hidden_layers=[32] --set model.evidence_activation=softplus"
      " --set train.lr=0.01 --set train.epochs_max=15 --set train.ensemble_m=3"
      " --set bootstrap.epsilons=[0,0.1] --seed 11";
  std::vector<std::string> mismatched;
  std::size_t compared = 0;
  for (const char* cmd : {"gen", "train", "eval", "bootstrap"}) {
    for (const char* run : {"a", "b"}) {
      const std::string line = std::string("\"") + EDL_CLI_PATH + "\" " + cmd + " --out \"" +
                               (work / run).string() + "\"" + sets + " > \"" + (work / "log.txt").string() +
                               "\" 2>&1";
      if (std::system(line.c_str()) != 0) {
        return {false, std::string("'edl ") + cmd + "' failed: " + read_bytes(work / "log.txt")};
      }
    }
  }
  const auto a = snapshot(work / "a");
  const auto b = snapshot(work / "b");
  for (const auto& [name, bytes] : a) {
    ++compared;
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) mismatched.push_back(name);
  }
  if (a.size() != b.size()) mismatched.push_back("<file set differs>");
  fs::remove_all(work);
  std::string detail = "gen/train/eval/bootstrap run twice: " + std::to_string(compared) + " files compared, " +
                       std::to_string(mismatched.size()) + " differ";
  for (const auto& m : mismatched) detail += " " + m;
  return {mismatched.empty() && compared > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "special-function oracles", special_functions},
      {2, "loss identities", loss_identity},
      {3, "gradients", gradients},
      {4, "opinion algebra", opinion_algebra},
      {5, "rejection trend", rejection_trend},
      {6, "noisy-label uncertainty", noisy_label_separation},
      {7, "bootstrapping trend", bootstrapping_trend},
      {8, "baseline contrast", baseline_contrast},
      {9, "out-of-distribution uncertainty", ood_uncertainty},
      {10, "metrics oracle", metrics_oracle},
      {11, "CLI determinism", cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
