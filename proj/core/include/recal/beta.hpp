#pragma once

#include <cstddef>
#include <span>

#include "recal/pit.hpp"

namespace recal {

// Special functions used by the beta fit.

/// psi(x) for x > 0: upward recurrence to x >= 10, then the asymptotic series.
double digamma(double x);
/// psi'(x) for x > 0, same scheme as `digamma`.
double trigamma(double x);
double log_beta(double a, double b);
/// I_x(a, b) by Lentz's continued fraction, using the symmetry
/// I_x(a,b) = 1 - I_{1-x}(b,a) on the slowly converging side.
double regularized_incomplete_beta(double a, double b, double x);

inline constexpr double kBetaClamp = 1e-4;
inline constexpr double kBetaParamCap = 1e4;
inline constexpr std::size_t kMinBetaRecords = 10;

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  /// Evaluation points and training PITs are clamped to [delta, 1 - delta].
  double delta = kBetaClamp;
};

/// Density at x clamped into [delta, 1 - delta]. Throws DomainError outside [0,1].
double beta_pdf(const BetaParams& p, double x);
/// Regularized incomplete beta; exact 0 and 1 at the endpoints.
double beta_cdf(const BetaParams& p, double x);

/// Mean log-likelihood of the (already clamped) sample under Beta(alpha, beta).
double beta_mean_log_likelihood(double alpha, double beta, double mean_log_x,
                                double mean_log_1mx);

struct BetaFit {
  BetaParams params;
  BetaParams moments;               ///< method-of-moments starting point
  double log_likelihood = 0.0;      ///< mean per-record, at `params`
  double moments_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;           ///< gradient sup-norm fell below 1e-10
  bool used_fallback = false;       ///< Newton diverged; moments returned
};

/// Maximum likelihood beta fit to PIT values. Starts from the method of
/// moments and runs damped Newton on (alpha, beta) jointly.
///
/// Throws InsufficientData (< 10 values), DegenerateData (zero variance
/// after clamping) and ParameterOutOfRange (estimate above 1e4).
BetaFit fit_beta_mle(std::span<const double> pits, double delta = kBetaClamp);
BetaFit fit_beta_mle(const PitDataset& d, double delta = kBetaClamp);

}  // namespace recal
