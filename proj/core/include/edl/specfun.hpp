#pragma once

// Special functions and beta-distribution primitives.
//
// All routines are pure and thread-safe. Domain violations throw
// std::domain_error.

namespace edl::specfun {

/// Parameters of a beta distribution. Both shape parameters are finite and > 0.
class BetaParams {
 public:
  BetaParams(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

 private:
  double alpha_;
  double beta_;
};

/// ln Gamma(x) for finite x > 0.
double log_gamma(double x);

/// Digamma function psi(x) = d/dx ln Gamma(x), for finite x > 0.
double digamma(double x);

/// Trigamma function psi'(x), for finite x > 0.
double trigamma(double x);

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
double log_beta_function(double a, double b);

/// Beta density f(y; alpha, beta) for y in (0, 1), evaluated in log space.
double beta_pdf(double y, const BetaParams& params);

/// Natural log of the beta density.
double beta_log_pdf(double y, const BetaParams& params);

/// KL(Beta(alpha, beta) || Beta(1, 1)) in closed form. Requires alpha, beta >= 1.
double beta_kl_to_uniform(const BetaParams& params);

/// Partial derivatives of beta_kl_to_uniform with respect to (alpha, beta).
struct KlGradient {
  double d_alpha;
  double d_beta;
};
KlGradient beta_kl_to_uniform_gradient(const BetaParams& params);

}  // namespace edl::specfun
