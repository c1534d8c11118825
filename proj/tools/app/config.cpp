#include "config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace edl::app {
namespace {

using nlohmann::json;

struct Field {
  std::string name;
  std::string type;
  std::string help;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

template <typename Get>
Field make(std::string name, std::string type, std::string help, Get member) {
  using Ref = decltype(member(std::declval<ExperimentConfig&>()));
  using T = std::remove_reference_t<Ref>;
  return Field{std::move(name), std::move(type), std::move(help),
               [member](const ExperimentConfig& c) { return json(member(const_cast<ExperimentConfig&>(c))); },
               [member](ExperimentConfig& c, const json& v) { member(c) = v.get<T>(); }};
}

template <typename E>
Field make_enum(std::string name, std::string type, std::string help, std::function<E&(ExperimentConfig&)> member,
                std::function<E(const std::string&)> parse) {
  return Field{std::move(name), std::move(type), std::move(help),
               [member](const ExperimentConfig& c) { return json(to_string(member(const_cast<ExperimentConfig&>(c)))); },
               [member, parse](ExperimentConfig& c, const json& v) { member(c) = parse(v.get<std::string>()); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(make("seed", "uint", "Run seed for data generation, initialization, shuffling and dropout.",
                     [](ExperimentConfig& c) -> std::uint64_t& { return c.seed; }));
    f.push_back(make("out", "path", "Output directory (overridden by --out; default from EDL_OUTPUT_ROOT).",
                     [](ExperimentConfig& c) -> std::string& { return c.out; }));

    f.push_back(make("data.source", "generate|csv", "Generate synthetic data or read the *_csv files.",
                     [](ExperimentConfig& c) -> std::string& { return c.data.source; }));
    f.push_back(make("data.n", "uint", "Samples generated before splitting.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.data.n; }));
    f.push_back(make("data.dim", "uint", "Feature dimension; only the first axis separates the classes.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.data.dim; }));
    f.push_back(Field{"data.separation", "real|null", "Distance between class means; null derives it from data.bayes_auc.",
                      [](const ExperimentConfig& c) { return c.data.separation ? json(*c.data.separation) : json(nullptr); },
                      [](ExperimentConfig& c, const json& v) {
                        if (v.is_null()) c.data.separation.reset();
                        else c.data.separation = v.get<double>();
                      }});
    f.push_back(make("data.bayes_auc", "real", "Bayes-optimal ROC-AUC of the noise-free problem, in [0.5, 1).",
                     [](ExperimentConfig& c) -> double& { return c.data.bayes_auc; }));
    f.push_back(make("data.flip_rate", "real", "Probability that a label is flipped, in [0, 0.5).",
                     [](ExperimentConfig& c) -> double& { return c.data.flip_rate; }));
    f.push_back(make("data.positive_fraction", "real", "Fraction of samples drawn from the positive cluster.",
                     [](ExperimentConfig& c) -> double& { return c.data.positive_fraction; }));
    f.push_back(make("data.group_size", "uint", "Samples per group for group-level splitting (0: one group per sample).",
                     [](ExperimentConfig& c) -> std::size_t& { return c.data.group_size; }));
    f.push_back(make("data.fractions", "[real,real,real]", "Train, validation and test fractions; must sum to 1.",
                     [](ExperimentConfig& c) -> std::vector<double>& { return c.data.fractions; }));
    f.push_back(make("data.ood_offset", "real", "Shift in standard deviations of the out-of-distribution probe.",
                     [](ExperimentConfig& c) -> double& { return c.data.ood_offset; }));
    f.push_back(make("data.ood_n", "uint", "Probe size; 0 disables ood.csv.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.data.ood_n; }));
    f.push_back(make("data.train_csv", "path", "Training CSV (default <out>/data/train.csv).",
                     [](ExperimentConfig& c) -> std::string& { return c.data.train_csv; }));
    f.push_back(make("data.val_csv", "path", "Validation CSV (default <out>/data/val.csv).",
                     [](ExperimentConfig& c) -> std::string& { return c.data.val_csv; }));
    f.push_back(make("data.test_csv", "path", "Test CSV (default <out>/data/test.csv).",
                     [](ExperimentConfig& c) -> std::string& { return c.data.test_csv; }));

    f.push_back(make("model.hidden_layers", "[uint,...]", "Hidden layer widths; [] is a linear model.",
                     [](ExperimentConfig& c) -> std::vector<std::size_t>& { return c.model.hidden_layers; }));
    f.push_back(make("model.dropout_rate", "real", "Dropout rate in [0, 1).",
                     [](ExperimentConfig& c) -> double& { return c.model.dropout_rate; }));
    f.push_back(make_enum<EvidenceActivation>(
        "model.evidence_activation", "relu|softplus", "Map from output logits to nonnegative evidence.",
        [](ExperimentConfig& c) -> EvidenceActivation& { return c.model.evidence_activation; },
        parse_evidence_activation));
    f.push_back(make_enum<DropoutPlacement>(
        "model.dropout_placement", "all_hidden|last_hidden", "Hidden layers followed by dropout.",
        [](ExperimentConfig& c) -> DropoutPlacement& { return c.model.dropout_placement; }, parse_dropout_placement));

    f.push_back(make("train.epochs_max", "uint", "Maximum number of epochs.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.train.config.epochs_max; }));
    f.push_back(make("train.batch_size", "uint", "Minibatch size.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.train.config.batch_size; }));
    f.push_back(make("train.patience", "uint", "Epochs without validation improvement before stopping.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.train.config.patience; }));
    f.push_back(make("train.lr", "real", "Learning rate (1e-4 is the preset for large image models).",
                     [](ExperimentConfig& c) -> double& { return c.train.config.lr; }));
    f.push_back(make_enum<OptimizerKind>("train.optimizer", "adam|sgd", "Optimizer.",
                                         [](ExperimentConfig& c) -> OptimizerKind& { return c.train.config.optimizer; },
                                         parse_optimizer_kind));
    f.push_back(make("train.lambda_zero", "real", "Regularization weight at epoch 0.",
                     [](ExperimentConfig& c) -> double& { return c.train.config.anneal.lambda_zero; }));
    f.push_back(make("train.lambda_max", "real", "Regularization weight after annealing; also used for validation loss.",
                     [](ExperimentConfig& c) -> double& { return c.train.config.anneal.lambda_max; }));
    f.push_back(make("train.anneal_epochs", "uint", "Epochs to ramp the weight from lambda_zero to lambda_max.",
                     [](ExperimentConfig& c) -> unsigned& { return c.train.config.anneal.anneal_epochs; }));
    f.push_back(make_enum<RegularizerMode>(
        "train.regularizer", "literal|misleading",
        "literal: (1, beta) for y=0 and (alpha, 1) for y=1; misleading: penalize only the wrong-class evidence.",
        [](ExperimentConfig& c) -> RegularizerMode& { return c.train.config.anneal.mode; }, parse_regularizer_mode));
    f.push_back(make("train.ensemble_m", "uint", "Ensemble members (1: single model).",
                     [](ExperimentConfig& c) -> std::size_t& { return c.train.config.ensemble_m; }));
    f.push_back(make("train.ensemble_subset_frac", "real", "Fraction of the training set each member sees, in (0, 1].",
                     [](ExperimentConfig& c) -> double& { return c.train.config.ensemble_subset_frac; }));
    f.push_back(make("train.parallel_members", "bool", "Train ensemble members on separate threads.",
                     [](ExperimentConfig& c) -> bool& { return c.train.config.parallel_members; }));
    f.push_back(make("train.baseline", "bool", "Also train a sigmoid-head baseline with the same architecture.",
                     [](ExperimentConfig& c) -> bool& { return c.train.baseline; }));

    f.push_back(make("eval.coverages", "[real,...]", "Coverage levels in (0, 1] for the rejection report.",
                     [](ExperimentConfig& c) -> std::vector<double>& { return c.eval.coverages; }));
    f.push_back(make("eval.threshold", "real", "Decision threshold on the positive probability.",
                     [](ExperimentConfig& c) -> double& { return c.eval.threshold; }));
    f.push_back(make("eval.deltas", "[real,...]", "Half-widths of the rejected probability interval around 0.5.",
                     [](ExperimentConfig& c) -> std::vector<double>& { return c.eval.deltas; }));

    f.push_back(make("bootstrap.epsilons", "[real,...]", "Fractions of most uncertain training samples to drop.",
                     [](ExperimentConfig& c) -> std::vector<double>& { return c.bootstrap.epsilons; }));
    f.push_back(make_enum<BootstrapScoring>(
        "bootstrap.scoring", "in_sample|held_out_folds", "Source of the per-sample training uncertainty.",
        [](ExperimentConfig& c) -> BootstrapScoring& { return c.bootstrap.scoring; }, parse_bootstrap_scoring));
    f.push_back(make("bootstrap.folds", "uint", "Folds for held_out_folds scoring.",
                     [](ExperimentConfig& c) -> std::size_t& { return c.bootstrap.folds; }));
    return f;
  }();
  return all;
}

const Field& find_field(const std::string& name) {
  for (const auto& f : fields()) {
    if (f.name == name) return f;
  }
  throw ConfigError(name, "unknown configuration field");
}

void set_field(ExperimentConfig& cfg, const Field& f, const json& value) {
  try {
    f.set(cfg, value);
  } catch (const json::exception& e) {
    throw ConfigError(f.name, "expected " + f.type + ", got " + value.dump());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(f.name, e.what());
  }
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

std::vector<FieldDoc> field_docs() {
  const ExperimentConfig defaults;
  std::vector<FieldDoc> docs;
  for (const auto& f : fields()) docs.push_back({f.name, f.type, f.get(defaults).dump(), f.help});
  return docs;
}

void apply_json(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", origin + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", origin + ": top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) {
      for (const auto& [sub, v] : value.items()) set_field(cfg, find_field(key + "." + sub), v);
    } else {
      set_field(cfg, find_field(key), value);
    }
  }
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set", "expected section.key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  const Field& f = find_field(key);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  // Path and name fields stay strings even when they look numeric.
  if (f.type == "path" || f.type.find('|') != std::string::npos) {
    if (!value.is_string() && !value.is_null()) value = raw;
  }
  set_field(cfg, f, value);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg;
  apply_json(cfg, text.str(), path.string());
  return cfg;
}

std::string to_json(const ExperimentConfig& cfg) {
  json doc = json::object();
  for (const auto& f : fields()) {
    const auto dot = f.name.find('.');
    if (dot == std::string::npos) {
      doc[f.name] = f.get(cfg);
    } else {
      doc[f.name.substr(0, dot)][f.name.substr(dot + 1)] = f.get(cfg);
    }
  }
  return doc.dump(2) + "\n";
}

double ExperimentConfig::separation() const {
  return data.separation ? *data.separation : separation_for_bayes_auc(data.bayes_auc);
}

GaussianOverlapConfig ExperimentConfig::generator() const {
  GaussianOverlapConfig g;
  g.n = data.n;
  g.dim = data.dim;
  g.separation = separation();
  g.flip_rate = data.flip_rate;
  g.positive_fraction = data.positive_fraction;
  g.group_size = data.group_size;
  return g;
}

SplitFractions ExperimentConfig::split() const { return {data.fractions[0], data.fractions[1], data.fractions[2]}; }

NetworkSpec ExperimentConfig::network(std::size_t input_dim) const {
  NetworkSpec s;
  s.input_dim = input_dim;
  s.hidden_layers = model.hidden_layers;
  s.dropout_rate = model.dropout_rate;
  s.evidence_activation = model.evidence_activation;
  s.dropout_placement = model.dropout_placement;
  return s;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t = train.config;
  t.seed = seed;
  t.anneal.lambda_now = t.anneal.lambda_zero;
  return t;
}

std::filesystem::path ExperimentConfig::train_path() const {
  return data.train_csv.empty() ? data_dir() / "train.csv" : std::filesystem::path(data.train_csv);
}
std::filesystem::path ExperimentConfig::val_path() const {
  return data.val_csv.empty() ? data_dir() / "val.csv" : std::filesystem::path(data.val_csv);
}
std::filesystem::path ExperimentConfig::test_path() const {
  return data.test_csv.empty() ? data_dir() / "test.csv" : std::filesystem::path(data.test_csv);
}

void ExperimentConfig::validate() const {
  require(!out.empty(), "out", "must not be empty");
  require(data.source == "generate" || data.source == "csv", "data.source", "must be 'generate' or 'csv'");
  require(data.dim >= 1, "data.dim", "must be >= 1");
  require(!data.separation || (std::isfinite(*data.separation) && *data.separation >= 0.0), "data.separation",
          "must be finite and >= 0");
  require(data.bayes_auc >= 0.5 && data.bayes_auc < 1.0, "data.bayes_auc", "must lie in [0.5, 1)");
  require(data.flip_rate >= 0.0 && data.flip_rate < 0.5, "data.flip_rate", "must lie in [0, 0.5)");
  require(data.positive_fraction > 0.0 && data.positive_fraction < 1.0, "data.positive_fraction",
          "must lie in (0, 1)");
  require(data.fractions.size() == 3, "data.fractions", "must hold exactly three values (train, val, test)");
  for (double v : data.fractions) require(v >= 0.0 && v <= 1.0, "data.fractions", "each value must lie in [0, 1]");
  const double total = std::accumulate(data.fractions.begin(), data.fractions.end(), 0.0);
  require(std::abs(total - 1.0) <= 1e-9, "data.fractions", "must sum to 1");
  require(data.fractions[0] > 0.0 && data.fractions[1] > 0.0, "data.fractions",
          "train and validation fractions must be positive");
  require(data.n >= 4, "data.n", "must be >= 4");
  require(std::isfinite(data.ood_offset), "data.ood_offset", "must be finite");
  if (data.source == "csv") {
    require(!data.train_csv.empty(), "data.train_csv", "required when data.source is csv");
    require(!data.val_csv.empty(), "data.val_csv", "required when data.source is csv");
  }

  try {
    network(data.dim).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  try {
    train_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train", e.what());
  }

  require(!eval.coverages.empty(), "eval.coverages", "must not be empty");
  std::set<double> seen;
  for (double c : eval.coverages) {
    require(in_unit_interval(c), "eval.coverages", "values must lie in (0, 1]");
    require(seen.insert(c).second, "eval.coverages", "values must be distinct");
  }
  require(eval.threshold >= 0.0 && eval.threshold <= 1.0, "eval.threshold", "must lie in [0, 1]");
  for (double d : eval.deltas) require(d >= 0.0 && d < 0.5, "eval.deltas", "values must lie in [0, 0.5)");
  for (double e : bootstrap.epsilons) require(e >= 0.0 && e < 1.0, "bootstrap.epsilons", "values must lie in [0, 1)");
  require(bootstrap.folds >= 2, "bootstrap.folds", "must be >= 2");
}

}  // namespace edl::app
