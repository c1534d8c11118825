#include "edl/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edl/specfun.hpp"

namespace edl {

std::string to_string(RegularizerMode m) { return m == RegularizerMode::kLiteral ? "literal" : "misleading"; }

RegularizerMode parse_regularizer_mode(const std::string& s) {
  if (s == "literal") return RegularizerMode::kLiteral;
  if (s == "misleading") return RegularizerMode::kMisleading;
  throw std::invalid_argument("unknown regularizer mode '" + s + "' (expected literal|misleading)");
}
namespace {

double floored(double e) { return e < kEvidenceFloor ? 0.0 : e; }

// Beta parameters fed to the regularizer.
struct ClampedParams {
  double alpha;
  double beta;
  bool keeps_alpha;
};

ClampedParams clamp_for_regularizer(double alpha, double beta, int label, RegularizerMode mode) {
  const bool keep_alpha = (mode == RegularizerMode::kLiteral) ? (label == 1) : (label == 0);
  if (keep_alpha) return {alpha, 1.0, true};
  return {1.0, beta, false};
}

}  // namespace

void Evidence::validate() const {
  if (!std::isfinite(pos) || !std::isfinite(neg)) {
    throw std::invalid_argument("Evidence: values must be finite");
  }
  if (pos < 0.0 || neg < 0.0) {
    throw std::invalid_argument("Evidence: values must be nonnegative");
  }
}

BetaOpinion opinion_from_evidence(const Evidence& ev) {
  ev.validate();
  const double e_pos = floored(ev.pos);
  const double e_neg = floored(ev.neg);
  BetaOpinion op;
  op.alpha = e_pos + 1.0;
  op.beta = e_neg + 1.0;
  op.total_evidence = op.alpha + op.beta;
  op.belief_pos = e_pos / op.total_evidence;
  op.belief_neg = e_neg / op.total_evidence;
  op.uncertainty = 2.0 / op.total_evidence;
  op.prob_pos = op.alpha / op.total_evidence;
  op.prob_neg = op.beta / op.total_evidence;
  return op;
}

BetaOpinion opinion_from_params(double alpha, double beta) {
  if (!(alpha >= 1.0) || !(beta >= 1.0)) {
    throw std::invalid_argument("opinion_from_params: alpha and beta must be >= 1");
  }
  return opinion_from_evidence({alpha - 1.0, beta - 1.0});
}

LabeledTarget::LabeledTarget(int label) : label_(label) {
  if (label != 0 && label != 1) {
    throw std::invalid_argument("LabeledTarget: label must be 0 or 1");
  }
}

void AnnealedWeight::validate() const {
  if (!std::isfinite(lambda_zero) || !std::isfinite(lambda_max) || lambda_zero < 0.0 ||
      lambda_max < lambda_zero) {
    throw std::invalid_argument("AnnealedWeight: need 0 <= lambda_zero <= lambda_max");
  }
  if (!(lambda_now >= 0.0) || !std::isfinite(lambda_now)) {
    throw std::invalid_argument("AnnealedWeight: lambda_now must be finite and >= 0");
  }
}

AnnealedWeight anneal(const AnnealedWeight& w, unsigned epoch) {
  w.validate();
  AnnealedWeight out = w;
  if (w.anneal_epochs == 0) {
    out.lambda_now = w.lambda_max;
    return out;
  }
  const double ramp = static_cast<double>(epoch) / static_cast<double>(w.anneal_epochs);
  out.lambda_now = std::min(w.lambda_max, w.lambda_zero + (w.lambda_max - w.lambda_zero) * ramp);
  return out;
}

double data_loss(const BetaOpinion& op, const LabeledTarget& target) {
  const double y = target.one_hot_pos();
  const double fit_pos = y - op.prob_pos;
  const double fit_neg = (1.0 - y) - op.prob_neg;
  const double variance = (op.prob_pos * (1.0 - op.prob_pos) + op.prob_neg * (1.0 - op.prob_neg)) /
                          (op.total_evidence + 1.0);
  return fit_pos * fit_pos + fit_neg * fit_neg + variance;
}

double reg_loss(const BetaOpinion& op, const LabeledTarget& target, RegularizerMode mode) {
  const auto clamped = clamp_for_regularizer(op.alpha, op.beta, target.label(), mode);
  return specfun::beta_kl_to_uniform({clamped.alpha, clamped.beta});
}

LossTotals total_loss(std::span<const BetaOpinion> ops, std::span<const LabeledTarget> targets,
                      const AnnealedWeight& w) {
  if (ops.size() != targets.size()) {
    throw std::invalid_argument("total_loss: opinions and targets differ in length");
  }
  if (ops.empty()) {
    throw std::invalid_argument("total_loss: at least one sample is required");
  }
  LossTotals totals;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    totals.sum += data_loss(ops[k], targets[k]) + w.lambda_now * reg_loss(ops[k], targets[k], w.mode);
  }
  totals.mean = totals.sum / static_cast<double>(ops.size());
  return totals;
}

double sample_loss(const Evidence& ev, const LabeledTarget& target, const AnnealedWeight& w) {
  const auto op = opinion_from_evidence(ev);
  return data_loss(op, target) + w.lambda_now * reg_loss(op, target, w.mode);
}

EvidenceGradient loss_gradient_wrt_evidence(const Evidence& ev, const LabeledTarget& target,
                                            const AnnealedWeight& w) {
  const auto op = opinion_from_evidence(ev);
  const double y = target.one_hot_pos();
  const double s = op.total_evidence;
  const double p = op.prob_pos;

  // With p- = 1 - p+ the data loss collapses to 2 (y - p)^2 + 2 p (1 - p) / (S + 1).
  const double dl_dp = -4.0 * (y - p) + 2.0 * (1.0 - 2.0 * p) / (s + 1.0);
  const double dl_ds = -2.0 * p * (1.0 - p) / ((s + 1.0) * (s + 1.0));
  const double dp_dalpha = op.beta / (s * s);
  const double dp_dbeta = -op.alpha / (s * s);

  EvidenceGradient g;
  g.d_pos = dl_dp * dp_dalpha + dl_ds;
  g.d_neg = dl_dp * dp_dbeta + dl_ds;

  if (w.lambda_now != 0.0) {
    const auto clamped = clamp_for_regularizer(op.alpha, op.beta, target.label(), w.mode);
    const auto kl = specfun::beta_kl_to_uniform_gradient({clamped.alpha, clamped.beta});
    if (clamped.keeps_alpha) {
      g.d_pos += w.lambda_now * kl.d_alpha;
    } else {
      g.d_neg += w.lambda_now * kl.d_beta;
    }
  }
  return g;
}

}  // namespace edl
