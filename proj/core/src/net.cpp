#include "edl/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edl {
namespace {

struct ForwardCache {
  // inputs[l] is the input to layer l; pre[l] its pre-activation.
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> masks;  // empty matrix when no dropout on that layer
  Eigen::MatrixXd output;             // raw head outputs, rows = samples
};

ForwardCache run_forward(const ModelParams& params, const Eigen::MatrixXd& x, const ForwardMode& mode) {
  const auto& spec = params.spec;
  if (static_cast<std::size_t>(x.cols()) != spec.input_dim) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) +
                                " features, model expects " + std::to_string(spec.input_dim));
  }
  const auto* train = std::get_if<TrainMode>(&mode);
  std::mt19937_64 rng(train ? train->seed : 0);
  const std::size_t hidden = spec.hidden_layers.size();

  ForwardCache cache;
  cache.inputs.reserve(params.layers.size());
  cache.pre.reserve(params.layers.size());
  cache.masks.resize(hidden);

  Eigen::MatrixXd act = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    cache.inputs.push_back(act);
    Eigen::MatrixXd z = act * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    cache.pre.push_back(z);
    if (l == hidden) {
      cache.output = z;
      break;
    }
    act = z.cwiseMax(0.0);
    if (train && spec.dropout_rate > 0.0 && spec.has_dropout_after(l)) {
      Eigen::MatrixXd mask(act.rows(), act.cols());
      for (Eigen::Index r = 0; r < act.rows(); ++r) {
        mask.row(r) = sample_dropout_mask(static_cast<std::size_t>(act.cols()), spec.dropout_rate, rng)
                          .transpose();
      }
      act = act.cwiseProduct(mask);
      cache.masks[l] = std::move(mask);
    }
  }
  return cache;
}

Evidence evidence_from_logits(double z_pos, double z_neg, EvidenceActivation a) {
  if (a == EvidenceActivation::kRelu) return {std::max(z_pos, 0.0), std::max(z_neg, 0.0)};
  return {softplus(z_pos), softplus(z_neg)};
}

double activation_slope(double z, EvidenceActivation a) {
  if (a == EvidenceActivation::kRelu) return z > 0.0 ? 1.0 : 0.0;
  return sigmoid(z);
}

Eigen::MatrixXd row_matrix(std::span<const double> x) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = x[i];
  return m;
}

void require_head(const ModelParams& params, HeadKind head, const char* fn) {
  if (params.spec.head != head) {
    throw std::invalid_argument(std::string(fn) + ": model has the wrong head (" +
                                to_string(params.spec.head) + ")");
  }
}

}  // namespace

std::string to_string(EvidenceActivation a) {
  return a == EvidenceActivation::kRelu ? "relu" : "softplus";
}
std::string to_string(HeadKind h) { return h == HeadKind::kEvidential ? "evidential" : "sigmoid"; }
std::string to_string(DropoutPlacement p) {
  return p == DropoutPlacement::kAllHidden ? "all_hidden" : "last_hidden";
}

EvidenceActivation parse_evidence_activation(const std::string& s) {
  if (s == "relu") return EvidenceActivation::kRelu;
  if (s == "softplus") return EvidenceActivation::kSoftplus;
  throw std::invalid_argument("unknown evidence activation '" + s + "' (expected relu|softplus)");
}
HeadKind parse_head_kind(const std::string& s) {
  if (s == "evidential") return HeadKind::kEvidential;
  if (s == "sigmoid") return HeadKind::kSigmoid;
  throw std::invalid_argument("unknown head '" + s + "' (expected evidential|sigmoid)");
}
DropoutPlacement parse_dropout_placement(const std::string& s) {
  if (s == "all_hidden") return DropoutPlacement::kAllHidden;
  if (s == "last_hidden") return DropoutPlacement::kLastHidden;
  throw std::invalid_argument("unknown dropout placement '" + s + "' (expected all_hidden|last_hidden)");
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("NetworkSpec: input_dim must be >= 1");
  for (auto width : hidden_layers) {
    if (width < 1) throw std::invalid_argument("NetworkSpec: hidden widths must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("NetworkSpec: dropout_rate must lie in [0, 1)");
  }
}

bool NetworkSpec::has_dropout_after(std::size_t hidden_index) const noexcept {
  if (dropout_placement == DropoutPlacement::kAllHidden) return true;
  return hidden_index + 1 == hidden_layers.size();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out.push_back(layer.weights(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
  return out;
}

void ModelParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw std::invalid_argument("ModelParams::assign_flat: expected " +
                                std::to_string(parameter_count()) + " values, got " +
                                std::to_string(values.size()));
  }
  std::size_t i = 0;
  for (auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = values[i++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = values[i++];
  }
}

bool ModelParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!(a.spec == b.spec) || a.seed != b.seed || a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& la = a.layers[l];
    const auto& lb = b.layers[l];
    if (la.weights.rows() != lb.weights.rows() || la.weights.cols() != lb.weights.cols() ||
        la.bias.size() != lb.bias.size()) {
      return false;
    }
    if (la.weights != lb.weights || la.bias != lb.bias) return false;
  }
  return true;
}

ModelParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelParams params;
  params.spec = spec;
  params.seed = seed;

  std::mt19937_64 rng(seed);
  std::size_t fan_in = spec.input_dim;
  std::vector<std::size_t> widths = spec.hidden_layers;
  widths.push_back(spec.output_dim());
  for (auto width : widths) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    params.layers.push_back(std::move(layer));
    fan_in = width;
  }
  return params;
}

Eigen::VectorXd sample_dropout_mask(std::size_t width, double rate, std::mt19937_64& rng) {
  Eigen::VectorXd mask(static_cast<Eigen::Index>(width));
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = keep(rng) ? scale : 0.0;
  return mask;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Evidence forward_evidence(const ModelParams& params, std::span<const double> x, ForwardMode mode) {
  return forward_evidence_batch(params, row_matrix(x), mode).front();
}

std::vector<Evidence> forward_evidence_batch(const ModelParams& params, const Eigen::MatrixXd& x,
                                             ForwardMode mode) {
  require_head(params, HeadKind::kEvidential, "forward_evidence");
  const auto cache = run_forward(params, x, mode);
  std::vector<Evidence> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < cache.output.rows(); ++r) {
    out.push_back(evidence_from_logits(cache.output(r, 0), cache.output(r, 1),
                                       params.spec.evidence_activation));
  }
  return out;
}

double forward_logit(const ModelParams& params, std::span<const double> x) {
  require_head(params, HeadKind::kSigmoid, "forward_logit");
  return run_forward(params, row_matrix(x), EvalMode{}).output(0, 0);
}

double forward_sigmoid_baseline(const ModelParams& params, std::span<const double> x) {
  return sigmoid(forward_logit(params, x));
}

std::vector<double> forward_sigmoid_batch(const ModelParams& params, const Eigen::MatrixXd& x) {
  require_head(params, HeadKind::kSigmoid, "forward_sigmoid_baseline");
  const auto cache = run_forward(params, x, EvalMode{});
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < cache.output.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = sigmoid(cache.output(r, 0));
  }
  return out;
}

LossAndGradient backward(const ModelParams& params, const Eigen::MatrixXd& x,
                         std::span<const int> labels, const AnnealedWeight& w, ForwardMode mode) {
  if (x.rows() == 0) throw std::invalid_argument("backward: empty batch");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw std::invalid_argument("backward: feature rows and labels differ in length");
  }
  const auto& spec = params.spec;
  const auto cache = run_forward(params, x, mode);
  const Eigen::Index n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossAndGradient result;
  Eigen::MatrixXd delta(n, static_cast<Eigen::Index>(spec.output_dim()));
  double loss_sum = 0.0;

  if (spec.head == HeadKind::kEvidential) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const LabeledTarget target(labels[static_cast<std::size_t>(r)]);
      const double z_pos = cache.output(r, 0);
      const double z_neg = cache.output(r, 1);
      const Evidence ev = evidence_from_logits(z_pos, z_neg, spec.evidence_activation);
      loss_sum += sample_loss(ev, target, w);
      const auto g = loss_gradient_wrt_evidence(ev, target, w);
      delta(r, 0) = g.d_pos * activation_slope(z_pos, spec.evidence_activation) * inv_n;
      delta(r, 1) = g.d_neg * activation_slope(z_neg, spec.evidence_activation) * inv_n;
    }
  } else {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double y = labels[static_cast<std::size_t>(r)] == 1 ? 1.0 : 0.0;
      const double z = cache.output(r, 0);
      loss_sum += softplus(z) - y * z;
      delta(r, 0) = (sigmoid(z) - y) * inv_n;
    }
  }
  result.loss_mean = loss_sum * inv_n;

  result.gradient.resize(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    auto& grad = result.gradient[l];
    grad.weights = delta.transpose() * cache.inputs[l];
    grad.bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    // Back through layer l's input, which is the (masked) ReLU output of layer l-1.
    Eigen::MatrixXd upstream = delta * params.layers[l].weights;
    const auto& mask = cache.masks[l - 1];
    if (mask.size() != 0) upstream = upstream.cwiseProduct(mask);
    const auto& pre = cache.pre[l - 1];
    delta = upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  }
  return result;
}

double batch_loss(const ModelParams& params, const Eigen::MatrixXd& x, std::span<const int> labels,
                  const AnnealedWeight& w, ForwardMode mode) {
  if (static_cast<std::size_t>(x.rows()) != labels.size() || x.rows() == 0) {
    throw std::invalid_argument("batch_loss: need a nonempty batch with one label per row");
  }
  const auto cache = run_forward(params, x, mode);
  double sum = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (params.spec.head == HeadKind::kEvidential) {
      const Evidence ev = evidence_from_logits(cache.output(r, 0), cache.output(r, 1),
                                               params.spec.evidence_activation);
      sum += sample_loss(ev, LabeledTarget(label), w);
    } else {
      const double z = cache.output(r, 0);
      sum += softplus(z) - (label == 1 ? z : 0.0);
    }
  }
  return sum / static_cast<double>(x.rows());
}

}  // namespace edl
