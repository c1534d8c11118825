#pragma once

// Binary evidential classification: mapping per-class evidence to a beta
// opinion, the expected squared-error data loss, the KL regularizer and the
// annealed total loss together with its analytic gradient.

#include <cstddef>
#include <span>
#include <string>

namespace edl {

/// Evidence below this value is treated as exactly zero.
inline constexpr double kEvidenceFloor = 1e-12;

/// Nonnegative, finite per-class evidence (e+, e-).
struct Evidence {
  double pos = 0.0;
  double neg = 0.0;

  /// Throws std::invalid_argument when either component is negative or non-finite.
  void validate() const;
};

/// Subjective-logic opinion for the binary case.
///
/// alpha = e+ + 1, beta = e- + 1, E = alpha + beta. Beliefs are e/E, the
/// uncertainty mass is 2 / E and the expected class probabilities are
/// alpha / E and beta / E.
struct BetaOpinion {
  double alpha = 1.0;
  double beta = 1.0;
  double belief_pos = 0.0;
  double belief_neg = 0.0;
  double uncertainty = 1.0;
  double prob_pos = 0.5;
  double prob_neg = 0.5;
  double total_evidence = 2.0;
};

BetaOpinion opinion_from_evidence(const Evidence& ev);

/// Builds the opinion from beta parameters directly (alpha, beta >= 1).
BetaOpinion opinion_from_params(double alpha, double beta);

/// Binary label with its one-hot encoding in (positive, negative) order.
class LabeledTarget {
 public:
  explicit LabeledTarget(int label);

  int label() const noexcept { return label_; }
  double one_hot_pos() const noexcept { return label_ == 1 ? 1.0 : 0.0; }
  double one_hot_neg() const noexcept { return label_ == 1 ? 0.0 : 1.0; }

 private:
  int label_;
};

/// Which beta parameter the regularizer resets to one before measuring the
/// divergence from the uniform beta.
enum class RegularizerMode {
  /// Keep alpha for y = 1 and beta for y = 0: (1, beta) if y = 0, (alpha, 1) if y = 1.
  kLiteral,
  /// Keep the non-target parameter: (alpha, 1) if y = 0, (1, beta) if y = 1.
  kMisleading,
};

std::string to_string(RegularizerMode m);
/// Accepts "literal" or "misleading".
RegularizerMode parse_regularizer_mode(const std::string& s);

/// Annealing state of the regularizer coefficient lambda.
struct AnnealedWeight {
  double lambda_now = 0.1;
  double lambda_zero = 0.1;
  double lambda_max = 1.0;
  unsigned anneal_epochs = 10;
  RegularizerMode mode = RegularizerMode::kLiteral;

  void validate() const;
};

/// Returns the weight with lambda_now set for the given epoch:
/// min(lambda_max, lambda_zero + (lambda_max - lambda_zero) * epoch / anneal_epochs).
AnnealedWeight anneal(const AnnealedWeight& w, unsigned epoch);

/// Closed-form expected squared error of the one-hot target under Beta(alpha, beta).
double data_loss(const BetaOpinion& op, const LabeledTarget& target);

/// KL of the clamped opinion to the uniform beta.
double reg_loss(const BetaOpinion& op, const LabeledTarget& target,
                RegularizerMode mode = RegularizerMode::kLiteral);

struct LossTotals {
  double sum = 0.0;
  double mean = 0.0;
};

/// Sum over samples of data_loss + lambda_now * reg_loss, and its per-sample mean.
LossTotals total_loss(std::span<const BetaOpinion> ops, std::span<const LabeledTarget> targets,
                      const AnnealedWeight& w);

struct EvidenceGradient {
  double d_pos = 0.0;
  double d_neg = 0.0;
};

/// Per-sample loss data_loss + lambda_now * reg_loss evaluated from raw evidence.
double sample_loss(const Evidence& ev, const LabeledTarget& target, const AnnealedWeight& w);

/// Analytic partial derivatives of sample_loss with respect to (e+, e-).
EvidenceGradient loss_gradient_wrt_evidence(const Evidence& ev, const LabeledTarget& target,
                                            const AnnealedWeight& w);

}  // namespace edl
