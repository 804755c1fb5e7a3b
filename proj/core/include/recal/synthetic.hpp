#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recal/forecast.hpp"

namespace recal {

/// A normal distribution given by mean and variance.
struct NormalSpec {
  double mean = 0.0;
  double variance = 1.0;

  double sd() const;
  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Upper tail 1 - cdf(x) without cancellation.
  double survival(double x) const;
  /// Inverse CDF by bisection to 1e-12 in x. Throws DomainError unless 0 < p < 1.
  double quantile(double p) const;
  /// Mass of [a, b], computed on whichever tail avoids cancellation.
  double interval_mass(double a, double b) const;
};

/// Forecasts of `spec` discretized onto `support` and renormalized.
BinnedForecast discretize(const NormalSpec& spec, const SupportPtr& support);

enum class ForecasterKind { kIdeal, kUnderconfident, kOverconfident, kBiased, kClimatological };

std::string to_string(ForecasterKind kind);
ForecasterKind parse_forecaster_kind(const std::string& name);

/// Each entry draws mu_i ~ N(hyper_mean, hyper_variance) and
/// y_i ~ N(mu_i, truth_variance). The forecaster then reports:
///   ideal           N(mu_i, truth_variance)
///   underconfident  N(mu_i, scale * truth_variance)   (scale > 1)
///   overconfident   N(mu_i, scale * truth_variance)   (scale < 1)
///   biased          N(mu_i + shift, truth_variance)
///   climatological  N(hyper_mean, hyper_variance + truth_variance)
/// A nonzero `drift_per_week` adds drift * (week - mid-season week) to the
/// forecast mean, giving a week-dependent PIT distribution.
struct GaussianScenario {
  double hyper_mean = 0.0;
  double hyper_variance = 1.0;
  double truth_variance = 1.0;
  ForecasterKind kind = ForecasterKind::kIdeal;
  double scale = 1.0;
  double shift = 0.0;
  double drift_per_week = 0.0;
  int n_per_season = 100;
  int n_seasons = 3;
  /// Entries in a season are spread over weeks 1..n_weeks; consecutive
  /// blocks of n_weeks entries form one location.
  int n_weeks = 1;
  double bin_width = 0.05;
  double support_lo = -8.0;
  double support_hi = 8.0;
  std::uint64_t seed = 0;
  std::string forecaster;  ///< defaults to the kind name
  std::string target = "synthetic";

  /// Throws DomainError when a parameter is out of range or the support is
  /// narrower than six marginal standard deviations.
  void validate() const;
};

/// Draws the archive (forecasts and observations). Deterministic in `seed`.
ForecastArchive generate(const GaussianScenario& scenario);

/// The single (forecast, truth) pair that every entry of `scenario` is a
/// location shift of. Drift is ignored.
struct OraclePair {
  NormalSpec forecast;
  NormalSpec truth;
};
OraclePair oracle_pair(const GaussianScenario& scenario);

/// Several forecasters that each see one independent part of the signal.
/// y = sum_k s_k + e with s_k ~ N(0, signal_variances[k]) and
/// e ~ N(0, noise_variance); forecaster k reports N(s_k, remaining variance),
/// so each is calibrated on its own.
struct SplitSignalScenario {
  std::vector<double> signal_variances = {1.0, 1.0};
  double noise_variance = 0.25;
  int n_per_season = 200;
  int n_seasons = 4;
  int n_weeks = 1;
  double bin_width = 0.05;
  double support_lo = -8.0;
  double support_hi = 8.0;
  std::uint64_t seed = 0;
  std::string target = "synthetic";
};

/// Forecasters are named "C1", "C2", ...; keys align across them.
ForecastArchive generate(const SplitSignalScenario& scenario);

/// g(p) = h(F^-1(p)) / f(F^-1(p)). Throws DomainError unless 0 < p < 1.
double oracle_pit_density(const NormalSpec& forecast, const NormalSpec& truth, double p);

/// -integral over [0,1] of g log g, by adaptive quadrature in p with
/// absolute tolerance 1e-6. Throws NonIntegrable on failure.
double oracle_entropy(const NormalSpec& forecast, const NormalSpec& truth);

/// E_h[log h(y)] - E_h[log f(y)], by quadrature over y. Throws NonIntegrable.
double oracle_logscore_gain(const NormalSpec& forecast, const NormalSpec& truth);

}  // namespace recal
