#pragma once

// Small fully connected network producing either two nonnegative evidence
// outputs (evidential head) or one logit (sigmoid baseline head).

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edl/evidential.hpp"

namespace edl {

enum class EvidenceActivation { kRelu, kSoftplus };
enum class HeadKind { kEvidential, kSigmoid };
enum class DropoutPlacement { kAllHidden, kLastHidden };

std::string to_string(EvidenceActivation a);
std::string to_string(HeadKind h);
std::string to_string(DropoutPlacement p);
EvidenceActivation parse_evidence_activation(const std::string& s);
HeadKind parse_head_kind(const std::string& s);
DropoutPlacement parse_dropout_placement(const std::string& s);

struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_layers;
  double dropout_rate = 0.0;
  EvidenceActivation evidence_activation = EvidenceActivation::kRelu;
  HeadKind head = HeadKind::kEvidential;
  DropoutPlacement dropout_placement = DropoutPlacement::kAllHidden;

  void validate() const;
  std::size_t output_dim() const noexcept { return head == HeadKind::kEvidential ? 2 : 1; }
  bool has_dropout_after(std::size_t hidden_index) const noexcept;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Affine layer y = W x + b with W stored as (outputs x inputs).
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct ModelParams {
  NetworkSpec spec;
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const;
  /// Weights (row-major) then bias, layer by layer.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);
  bool all_finite() const;
};

bool operator==(const ModelParams& a, const ModelParams& b);

/// Deterministic He-style uniform initialization U(-sqrt(6/fan_in), sqrt(6/fan_in)); zero biases.
ModelParams init_params(const NetworkSpec& spec, std::uint64_t seed);

struct EvalMode {};
/// Training-mode forward pass; dropout masks are drawn from this seed.
struct TrainMode {
  std::uint64_t seed = 0;
};
using ForwardMode = std::variant<EvalMode, TrainMode>;

/// Inverted-dropout keep mask (entries 0 or 1 / (1 - rate)).
Eigen::VectorXd sample_dropout_mask(std::size_t width, double rate, std::mt19937_64& rng);

Evidence forward_evidence(const ModelParams& params, std::span<const double> x,
                          ForwardMode mode = EvalMode{});

/// Evidence for every row of `x`.
std::vector<Evidence> forward_evidence_batch(const ModelParams& params, const Eigen::MatrixXd& x,
                                             ForwardMode mode = EvalMode{});

/// Output logit of a sigmoid-head model.
double forward_logit(const ModelParams& params, std::span<const double> x);

/// Probability output of a sigmoid-head model.
double forward_sigmoid_baseline(const ModelParams& params, std::span<const double> x);

std::vector<double> forward_sigmoid_batch(const ModelParams& params, const Eigen::MatrixXd& x);

struct LossAndGradient {
  double loss_mean = 0.0;
  std::vector<DenseLayer> gradient;
};

/// Mean loss over the batch and its exact gradient with respect to every
/// parameter. Evidential heads use the annealed evidential loss; sigmoid
/// heads use binary cross-entropy and ignore `w`. In train mode the dropout
/// masks of the forward pass are reused.
LossAndGradient backward(const ModelParams& params, const Eigen::MatrixXd& x,
                         std::span<const int> labels, const AnnealedWeight& w,
                         ForwardMode mode = EvalMode{});

/// Mean loss only.
double batch_loss(const ModelParams& params, const Eigen::MatrixXd& x, std::span<const int> labels,
                  const AnnealedWeight& w, ForwardMode mode = EvalMode{});

double sigmoid(double z) noexcept;
double softplus(double z) noexcept;

}  // namespace edl
