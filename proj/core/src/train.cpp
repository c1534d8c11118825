#include "edl/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "edl/checkpoint.hpp"
#include "json_fwd.hpp"

namespace edl {
namespace {

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, const ModelParams& shape) : kind_(kind), lr_(lr) {
    if (kind_ == OptimizerKind::kAdam) {
      for (const auto& layer : shape.layers) {
        first_.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                          Eigen::VectorXd::Zero(layer.bias.size())});
      }
      second_ = first_;
    }
  }

  void step(ModelParams& params, const std::vector<DenseLayer>& grad) {
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        params.layers[l].weights -= lr_ * grad[l].weights;
        params.layers[l].bias -= lr_ * grad[l].bias;
      }
      return;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      update(params.layers[l].weights, first_[l].weights, second_[l].weights, grad[l].weights, c1, c2);
      update(params.layers[l].bias, first_[l].bias, second_[l].bias, grad[l].bias, c1, c2);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  template <typename M>
  void update(M& p, M& m, M& v, const M& g, double c1, double c2) const {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  OptimizerKind kind_;
  double lr_;
  std::size_t t_ = 0;
  std::vector<DenseLayer> first_;
  std::vector<DenseLayer> second_;
};

MemberResult train_member(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                          const TrainConfig& cfg, std::uint64_t seed) {
  if (train.empty() || val.empty()) throw std::invalid_argument("fit: train and validation sets must be nonempty");
  if (train.feature_dim() != spec.input_dim || val.feature_dim() != spec.input_dim) {
    throw std::invalid_argument("fit: dataset feature dimension does not match the network input");
  }

  MemberResult result;
  result.params = init_params(spec, seed);
  result.subset_ids = train.ids();
  Optimizer opt(cfg.optimizer, cfg.lr, result.params);

  const Eigen::MatrixXd x_train = train.feature_matrix();
  const std::vector<int> y_train = train.labels();
  const Eigen::MatrixXd x_val = val.feature_matrix();
  const std::vector<int> y_val = val.labels();
  AnnealedWeight val_weight = cfg.anneal;
  val_weight.lambda_now = cfg.anneal.lambda_max;

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  double best_val = std::numeric_limits<double>::infinity();
  ModelParams best_params = result.params;
  std::size_t wait = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    const AnnealedWeight w = anneal(cfg.anneal, static_cast<unsigned>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_acc = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const auto rows = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd xb(rows, x_train.cols());
      std::vector<int> yb(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        xb.row(static_cast<Eigen::Index>(i - start)) = x_train.row(order[i]);
        yb[i - start] = y_train[static_cast<std::size_t>(order[i])];
      }
      const ForwardMode mode = spec.dropout_rate > 0.0 ? ForwardMode{TrainMode{rng()}} : ForwardMode{EvalMode{}};
      LossAndGradient lg;
      try {
        lg = backward(result.params, xb, yb, w, mode);
      } catch (const std::invalid_argument& e) {
        // Inputs were validated up front, so this can only be non-finite network output.
        throw TrainingDiverged("fit: non-finite network output at epoch " + std::to_string(epoch) + " (seed " +
                               std::to_string(seed) + "): " + e.what());
      }
      if (!std::isfinite(lg.loss_mean)) {
        throw TrainingDiverged("fit: non-finite training loss at epoch " + std::to_string(epoch) +
                               " (seed " + std::to_string(seed) + "); lower the learning rate");
      }
      loss_acc += lg.loss_mean * static_cast<double>(rows);
      opt.step(result.params, lg.gradient);
    }
    if (!result.params.all_finite()) {
      throw TrainingDiverged("fit: parameters became non-finite at epoch " + std::to_string(epoch));
    }

    const double val_loss = batch_loss(result.params, x_val, y_val, val_weight);
    if (!std::isfinite(val_loss)) {
      throw TrainingDiverged("fit: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back({epoch, loss_acc / static_cast<double>(order.size()), val_loss, w.lambda_now});

    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = result.params;
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      break;
    }
  }
  result.params = std::move(best_params);
  return result;
}

}  // namespace

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd|adam)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (ensemble_m < 1) throw std::invalid_argument("TrainConfig: ensemble_m must be >= 1");
  if (!(ensemble_subset_frac > 0.0 && ensemble_subset_frac <= 1.0)) {
    throw std::invalid_argument("TrainConfig: ensemble_subset_frac must lie in (0, 1]");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  anneal.validate();
}

void TrainedModel::validate() const {
  if (members.empty()) throw std::invalid_argument("TrainedModel: no members");
  for (const auto& m : members) {
    if (!(m.params.spec == spec)) throw std::invalid_argument("TrainedModel: member spec mismatch");
  }
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), 0x65646cU};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TrainedModel fit(const Dataset& train, const Dataset& val, const NetworkSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (cfg.ensemble_m != 1) throw std::invalid_argument("fit: ensemble_m must be 1; use fit_ensemble");
  TrainedModel model;
  model.spec = spec;
  model.members.push_back(train_member(train, val, spec, cfg, cfg.seed));
  return model;
}

TrainedModel fit_ensemble(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                          const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (cfg.ensemble_m == 1) return fit(train, val, spec, cfg);

  const auto subset_size = static_cast<std::size_t>(
      std::floor(cfg.ensemble_subset_frac * static_cast<double>(train.size()) + 1e-9));
  if (subset_size < cfg.batch_size) {
    throw std::invalid_argument("fit_ensemble: member subset of " + std::to_string(subset_size) +
                                " samples is smaller than one batch (" + std::to_string(cfg.batch_size) + ")");
  }

  std::vector<Dataset> subsets;
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < cfg.ensemble_m; ++k) {
    const std::uint64_t seed = member_seed(cfg.seed, k);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> positions(train.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::shuffle(positions.begin(), positions.end(), rng);
    positions.resize(subset_size);
    std::sort(positions.begin(), positions.end());
    subsets.push_back(train.subset(positions));
    seeds.push_back(seed);
  }

  TrainedModel model;
  model.spec = spec;
  if (cfg.parallel_members) {
    std::vector<std::future<MemberResult>> jobs;
    for (std::size_t k = 0; k < cfg.ensemble_m; ++k) {
      jobs.push_back(std::async(std::launch::async, [&, k] {
        return train_member(subsets[k], val, spec, cfg, seeds[k]);
      }));
    }
    for (auto& job : jobs) model.members.push_back(job.get());
  } else {
    for (std::size_t k = 0; k < cfg.ensemble_m; ++k) {
      model.members.push_back(train_member(subsets[k], val, spec, cfg, seeds[k]));
    }
  }
  return model;
}

TrainedModel fit_model(const Dataset& train, const Dataset& val, const NetworkSpec& spec,
                       const TrainConfig& cfg) {
  return cfg.ensemble_m > 1 ? fit_ensemble(train, val, spec, cfg) : fit(train, val, spec, cfg);
}

Evidence average_evidence(std::span<const Evidence> members) {
  if (members.empty()) throw std::invalid_argument("average_evidence: no members");
  Evidence mean;
  for (const auto& e : members) {
    mean.pos += e.pos;
    mean.neg += e.neg;
  }
  mean.pos /= static_cast<double>(members.size());
  mean.neg /= static_cast<double>(members.size());
  return mean;
}

BetaOpinion predict(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.spec.input_dim) {
    throw std::invalid_argument("predict: input has " + std::to_string(x.size()) +
                                " features, model expects " + std::to_string(model.spec.input_dim));
  }
  std::vector<Evidence> ev;
  ev.reserve(model.size());
  for (const auto& m : model.members) ev.push_back(forward_evidence(m.params, x));
  return opinion_from_evidence(average_evidence(ev));
}

std::vector<BetaOpinion> predict_batch(const TrainedModel& model, const Dataset& d) {
  if (d.feature_dim() != model.spec.input_dim) {
    throw std::invalid_argument("predict: dataset dimension does not match the model");
  }
  const Eigen::MatrixXd x = d.feature_matrix();
  std::vector<Evidence> sum(d.size());
  for (const auto& m : model.members) {
    const auto ev = forward_evidence_batch(m.params, x);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      sum[i].pos += ev[i].pos;
      sum[i].neg += ev[i].neg;
    }
  }
  std::vector<BetaOpinion> out;
  out.reserve(d.size());
  const double m = static_cast<double>(model.size());
  for (const auto& e : sum) out.push_back(opinion_from_evidence({e.pos / m, e.neg / m}));
  return out;
}

std::vector<double> predict_probability_batch(const TrainedModel& model, const Dataset& d) {
  if (d.feature_dim() != model.spec.input_dim) {
    throw std::invalid_argument("predict: dataset dimension does not match the model");
  }
  const Eigen::MatrixXd x = d.feature_matrix();
  std::vector<double> sum(d.size(), 0.0);
  for (const auto& m : model.members) {
    const auto p = forward_sigmoid_batch(m.params, x);
    for (std::size_t i = 0; i < p.size(); ++i) sum[i] += p[i];
  }
  for (auto& v : sum) v /= static_cast<double>(model.size());
  return sum;
}

void save_trained_model(const TrainedModel& model, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t k = 0; k < model.size(); ++k) {
    const std::string file = stem + "_member_" + std::to_string(k) + ".json";
    save_checkpoint(model.members[k].params, dir / file);
    members.push_back({{"file", file},
                       {"seed", model.members[k].params.seed},
                       {"best_epoch", model.members[k].best_epoch},
                       {"epochs_run", model.members[k].history.size()},
                       {"n_train", model.members[k].subset_ids.size()},
                       {"subset_ids", model.members[k].subset_ids}});
  }
  const nlohmann::json manifest{{"format", "edl.manifest"},
                                {"version", kCheckpointVersion},
                                {"spec", detail::spec_to_json(model.spec)},
                                {"members", std::move(members)}};
  std::ofstream out(dir / (stem + "_manifest.json"), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << manifest.dump(1) << '\n';
}

TrainedModel load_trained_model(const std::filesystem::path& dir, const std::string& stem) {
  const auto path = dir / (stem + "_manifest.json");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    if (manifest.at("format").get<std::string>() != "edl.manifest") {
      throw std::runtime_error("manifest " + path.string() + ": unexpected format tag");
    }
    TrainedModel model;
    model.spec = detail::spec_from_json(manifest.at("spec"));
    for (const auto& m : manifest.at("members")) {
      MemberResult member;
      member.params = load_checkpoint(dir / m.at("file").get<std::string>());
      member.best_epoch = m.value("best_epoch", std::size_t{0});
      if (m.contains("subset_ids")) member.subset_ids = m.at("subset_ids").get<std::vector<std::uint64_t>>();
      model.members.push_back(std::move(member));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest " + path.string() + ": " + e.what());
  }
}

std::string history_csv(const TrainedModel& model) {
  std::string out = "member,epoch,train_loss,val_loss,lambda\n";
  char buf[160];
  for (std::size_t k = 0; k < model.size(); ++k) {
    for (const auto& r : model.members[k].history) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", k, r.epoch, r.train_loss, r.val_loss,
                    r.lambda);
      out += buf;
    }
  }
  return out;
}

}  // namespace edl
