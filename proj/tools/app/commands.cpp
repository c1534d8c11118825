#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "edl/report_io.hpp"

namespace edl::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kModelStem[] = "model";
constexpr char kBaselineStem[] = "baseline";

// Seeds for the independent streams of one run.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kProbeStream = 2;

std::string relative(const ExperimentConfig& cfg, const fs::path& p) {
  return p.lexically_relative(cfg.out).generic_string();
}

Dataset require_csv(const fs::path& path, const std::string& field) {
  if (!fs::exists(path)) throw ConfigError(field, "file not found: " + path.string() + " (run 'edl gen' first?)");
  return load_csv(path);
}

std::string eps_label(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", eps);
  return buf;
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TrainedModel load_model(const ExperimentConfig& cfg, const std::string& stem) {
  if (!fs::exists(cfg.model_dir() / (stem + "_manifest.json"))) {
    throw ConfigError("out", "no trained model in " + cfg.model_dir().string() + " (run 'edl train' first?)");
  }
  return load_trained_model(cfg.model_dir(), stem);
}

}  // namespace

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::string uncertainty_by_noise_csv(const Dataset& d, const std::vector<double>& u) {
  std::vector<double> groups[2];
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].noise_flag) groups[*d[i].noise_flag == 1 ? 1 : 0].push_back(u[i]);
  }
  std::string out = "noise_flag,n,mean,q25,median,q75\n";
  for (int g = 0; g < 2; ++g) {
    const auto q = quartiles(groups[g]);
    out += std::to_string(g) + "," + std::to_string(groups[g].size()) + "," + format_real(mean(groups[g])) + "," +
           format_real(q.q25) + "," + format_real(q.median) + "," + format_real(q.q75) + "\n";
  }
  return out;
}

Written cmd_gen(const ExperimentConfig& cfg) {
  if (cfg.data.source != "generate") throw ConfigError("data.source", "gen requires data.source = generate");
  const auto all = gen_gaussian_overlap(cfg.generator(), cfg.seed);
  auto parts = split_by_group(all, cfg.split(), cfg.seed + kSplitStream);
  fs::create_directories(cfg.data_dir());

  Written written;
  const char* names[3] = {"train.csv", "val.csv", "test.csv"};
  json counts = json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto path = cfg.data_dir() / names[k];
    save_csv(parts[k], path);
    written.push_back(relative(cfg, path));
    counts[names[k]] = {{"n", parts[k].size()}, {"positives", parts[k].count_label(1)}};
  }
  if (cfg.data.ood_n > 0) {
    const auto probe = gen_ood_probe(all, cfg.data.ood_offset, cfg.data.ood_n, cfg.seed + kProbeStream);
    const auto path = cfg.data_dir() / "ood.csv";
    save_csv(probe, path);
    written.push_back(relative(cfg, path));
    counts["ood.csv"] = {{"n", probe.size()}};
  }

  const auto g = cfg.generator();
  const json provenance{{"generator", "gaussian_overlap"},
                        {"seed", cfg.seed},
                        {"n", g.n},
                        {"dim", g.dim},
                        {"separation", g.separation},
                        {"bayes_auc", bayes_auc_for_separation(g.separation)},
                        {"flip_rate", g.flip_rate},
                        {"positive_fraction", g.positive_fraction},
                        {"group_size", g.group_size},
                        {"fractions", cfg.data.fractions},
                        {"ood_offset", cfg.data.ood_offset},
                        {"files", counts}};
  const auto path = cfg.data_dir() / "provenance.json";
  write_text_file(path, provenance.dump(1) + "\n");
  written.push_back(relative(cfg, path));
  return written;
}

Written cmd_train(const ExperimentConfig& cfg) {
  const auto train = require_csv(cfg.train_path(), "data.train_csv");
  const auto val = require_csv(cfg.val_path(), "data.val_csv");
  if (train.feature_dim() != val.feature_dim()) {
    throw ConfigError("data.val_csv", "feature dimension differs from the training set");
  }
  const auto spec = cfg.network(train.feature_dim());
  const auto tc = cfg.train_config();

  Written written;
  fs::create_directories(cfg.model_dir());
  const auto model = fit_model(train, val, spec, tc);
  save_trained_model(model, cfg.model_dir(), kModelStem);
  for (std::size_t k = 0; k < model.size(); ++k) {
    written.push_back(relative(cfg, cfg.model_dir() / (std::string(kModelStem) + "_member_" + std::to_string(k) + ".json")));
  }
  written.push_back(relative(cfg, cfg.model_dir() / (std::string(kModelStem) + "_manifest.json")));
  write_text_file(cfg.model_dir() / "history.csv", history_csv(model));
  written.push_back(relative(cfg, cfg.model_dir() / "history.csv"));

  if (cfg.train.baseline) {
    NetworkSpec bspec = spec;
    bspec.head = HeadKind::kSigmoid;
    TrainConfig btc = tc;
    btc.ensemble_m = 1;
    const auto baseline = fit(train, val, bspec, btc);
    save_trained_model(baseline, cfg.model_dir(), kBaselineStem);
    written.push_back(relative(cfg, cfg.model_dir() / (std::string(kBaselineStem) + "_member_0.json")));
    written.push_back(relative(cfg, cfg.model_dir() / (std::string(kBaselineStem) + "_manifest.json")));
    write_text_file(cfg.model_dir() / "baseline_history.csv", history_csv(baseline));
    written.push_back(relative(cfg, cfg.model_dir() / "baseline_history.csv"));
  }
  return written;
}

Written cmd_eval(const ExperimentConfig& cfg) {
  const auto model = load_model(cfg, kModelStem);
  const auto test = require_csv(cfg.test_path(), "data.test_csv");
  if (test.empty()) throw ConfigError("data.fractions", "test split is empty; nothing to evaluate");
  const auto train = require_csv(cfg.train_path(), "data.train_csv");

  Written written;
  fs::create_directories(cfg.eval_dir());
  const auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(cfg.eval_dir() / name, text);
    written.push_back(relative(cfg, cfg.eval_dir() / name));
  };

  const auto scored = score_evidential(model, test);
  const auto report = coverage_curve(scored, cfg.eval.coverages, cfg.eval.threshold);
  put("coverage_report.csv", coverage_report_csv(report));
  put("coverage_report.json", coverage_report_json(report));

  json summary{{"n_test", test.size()}, {"threshold", cfg.eval.threshold}, {"mean_u_test", mean(scored.uncertainties)}};
  if (scored.count_label(0) > 0 && scored.count_label(1) > 0) {
    summary["auc"] = roc_auc(scored);
    summary["best_working_point"] = best_working_point(scored.scores, scored.labels);
  }
  const auto f1 = f1_scores(scored.scores, scored.labels, cfg.eval.threshold);
  summary["f1_pos"] = f1.f1_pos;
  summary["f1_neg"] = f1.f1_neg;
  summary["micro_f1"] = f1.micro;

  if (fs::exists(cfg.model_dir() / (std::string(kBaselineStem) + "_manifest.json"))) {
    const auto baseline = load_model(cfg, kBaselineStem);
    const auto bscored = score_baseline(baseline, test);
    put("baseline_comparison.csv",
        baseline_comparison_csv(baseline_comparison(bscored.scores, scored, cfg.eval.deltas, cfg.eval.threshold)));
  }

  const auto train_scored = score_evidential(model, train);
  const bool has_flags = std::any_of(train.samples().begin(), train.samples().end(),
                                     [](const Sample& s) { return s.noise_flag.has_value(); });
  if (has_flags) put("uncertainty_by_noise.csv", uncertainty_by_noise_csv(train, train_scored.uncertainties));

  const auto ood_path = cfg.data_dir() / "ood.csv";
  if (cfg.data.source == "generate" && fs::exists(ood_path)) {
    const auto probe = load_csv(ood_path);
    summary["mean_u_ood"] = mean(score_evidential(model, probe).uncertainties);
  }
  put("summary.json", summary.dump(1) + "\n");
  return written;
}

Written cmd_bootstrap(const ExperimentConfig& cfg) {
  const auto base = load_model(cfg, kModelStem);
  const auto train = require_csv(cfg.train_path(), "data.train_csv");
  const auto val = require_csv(cfg.val_path(), "data.val_csv");
  const auto test = require_csv(cfg.test_path(), "data.test_csv");
  const Dataset* test_ptr = test.empty() ? nullptr : &test;

  BootstrapOptions options;
  options.scoring = cfg.bootstrap.scoring;
  options.folds = cfg.bootstrap.folds;
  options.threshold = cfg.eval.threshold;
  const auto outcome =
      bootstrap_retrain(train, val, base.spec, cfg.train_config(), cfg.bootstrap.epsilons, test_ptr, options, &base);

  Written written;
  fs::create_directories(cfg.bootstrap_dir());
  std::string report = "epsilon,n_kept,n_dropped,n_flipped_dropped,auc,f1_pos,f1_neg\n";
  const auto row = [&](const std::string& eps, std::size_t kept, std::size_t dropped, const std::string& flipped,
                       const std::optional<MetricTriple>& m) {
    report += eps + "," + std::to_string(kept) + "," + std::to_string(dropped) + "," + flipped + ",";
    if (m) report += opt_real(m->auc) + "," + format_real(m->f1_pos) + "," + format_real(m->f1_neg);
    else report += ",,";
    report += "\n";
  };
  row("base", train.size(), 0, "", outcome.base_metrics);

  std::unordered_map<std::uint64_t, int> flags;
  for (const auto& s : train.samples()) {
    if (s.noise_flag) flags[s.id] = *s.noise_flag;
  }
  for (const auto& e : outcome.entries) {
    std::string flipped;
    if (!flags.empty()) {
      std::size_t n = 0;
      for (auto id : e.plan.dropped_ids) n += flags.count(id) && flags[id] == 1 ? 1 : 0;
      flipped = std::to_string(n);
    }
    row(eps_label(e.epsilon), e.plan.kept_ids.size(), e.plan.dropped_ids.size(), flipped, e.test_metrics);
    const std::string name = "plan_eps_" + eps_label(e.epsilon) + ".json";
    write_text_file(cfg.bootstrap_dir() / name, bootstrap_plan_json(e.plan));
    written.push_back(relative(cfg, cfg.bootstrap_dir() / name));
  }
  write_text_file(cfg.bootstrap_dir() / "bootstrap_report.csv", report);
  written.push_back(relative(cfg, cfg.bootstrap_dir() / "bootstrap_report.csv"));
  return written;
}

}  // namespace edl::app
