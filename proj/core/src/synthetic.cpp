#include "recal/synthetic.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "recal/error.hpp"

namespace recal {

namespace {

constexpr double kQuadratureTolerance = 1e-6;

// Solves cdf(x) = p (upper == false) or survival(x) = p (upper == true).
double bisect_quantile(const NormalSpec& spec, double p, bool upper) {
  const double sd = spec.sd();
  double lo = spec.mean - 60.0 * sd;
  double hi = spec.mean + 60.0 * sd;
  while (hi - lo > 1e-12 * std::max(1.0, std::abs(spec.mean) + sd)) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const bool below_target = upper ? spec.survival(mid) > p : spec.cdf(mid) < p;
    (below_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// log g at the point whose lower-tail probability is p (or upper-tail
// probability q when upper is set).
double log_pit_density(const NormalSpec& forecast, const NormalSpec& truth, double tail,
                       bool upper) {
  const double x = bisect_quantile(forecast, tail, upper);
  return truth.log_pdf(x) - forecast.log_pdf(x);
}

}  // namespace

double NormalSpec::sd() const { return std::sqrt(variance); }

double NormalSpec::log_pdf(double x) const {
  const double z = (x - mean) / sd();
  return -0.5 * z * z - std::log(sd()) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double NormalSpec::pdf(double x) const { return std::exp(log_pdf(x)); }

double NormalSpec::cdf(double x) const {
  return 0.5 * std::erfc(-(x - mean) / (sd() * std::numbers::sqrt2));
}

double NormalSpec::survival(double x) const {
  return 0.5 * std::erfc((x - mean) / (sd() * std::numbers::sqrt2));
}

double NormalSpec::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomainError, "normal quantile needs 0 < p < 1");
  }
  return p <= 0.5 ? bisect_quantile(*this, p, false) : bisect_quantile(*this, 1.0 - p, true);
}

double NormalSpec::interval_mass(double a, double b) const {
  if (b <= a) return 0.0;
  if (a >= mean) return std::max(0.0, survival(a) - survival(b));
  if (b <= mean) return std::max(0.0, cdf(b) - cdf(a));
  return std::max(0.0, 1.0 - cdf(a) - survival(b));
}

BinnedForecast discretize(const NormalSpec& spec, const SupportPtr& support) {
  const auto edges = support->edges();
  BinnedForecast f{support, std::vector<double>(support->size())};
  double total = 0.0;
  for (std::size_t k = 0; k < f.mass.size(); ++k) {
    f.mass[k] = spec.interval_mass(edges[k], edges[k + 1]);
    total += f.mass[k];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kDomainError, "forecast places no mass on the support");
  }
  for (double& m : f.mass) m /= total;
  return f;
}

std::string to_string(ForecasterKind kind) {
  switch (kind) {
    case ForecasterKind::kIdeal: return "ideal";
    case ForecasterKind::kUnderconfident: return "underconfident";
    case ForecasterKind::kOverconfident: return "overconfident";
    case ForecasterKind::kBiased: return "biased";
    case ForecasterKind::kClimatological: return "climatological";
  }
  return "unknown";
}

ForecasterKind parse_forecaster_kind(const std::string& name) {
  for (auto kind : {ForecasterKind::kIdeal, ForecasterKind::kUnderconfident,
                    ForecasterKind::kOverconfident, ForecasterKind::kBiased,
                    ForecasterKind::kClimatological}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kParseError, "unknown forecaster kind '" + name + "'");
}

void GaussianScenario::validate() const {
  if (!(scale > 0.0) || !(truth_variance > 0.0) || !(hyper_variance >= 0.0) ||
      !(bin_width > 0.0)) {
    throw Error(ErrorCode::kDomainError,
                "scenario needs scale > 0, truth_variance > 0, hyper_variance >= 0, bin_width > 0");
  }
  if (n_per_season < 1 || n_seasons < 1 || n_weeks < 1) {
    throw Error(ErrorCode::kDomainError, "scenario needs positive entry, season and week counts");
  }
  const double marginal_sd = std::sqrt(hyper_variance + truth_variance);
  if (!(support_hi - support_lo >= 6.0 * marginal_sd) || hyper_mean <= support_lo ||
      hyper_mean >= support_hi) {
    throw Error(ErrorCode::kDomainError,
                "support must span six marginal standard deviations around the hyper mean");
  }
}

ForecastArchive generate(const GaussianScenario& s) {
  s.validate();
  const auto support = std::make_shared<const BinSupport>(
      BinSupport::uniform(s.support_lo, s.support_hi, s.bin_width));
  const std::string name = s.forecaster.empty() ? to_string(s.kind) : s.forecaster;
  const double mid_week = 0.5 * (s.n_weeks + 1);

  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ForecastArchive archive;

  for (int season = 1; season <= s.n_seasons; ++season) {
    for (int j = 0; j < s.n_per_season; ++j) {
      const int week = j % s.n_weeks + 1;
      const std::string location = "L" + std::to_string(j / s.n_weeks + 1);
      const double mu = s.hyper_mean + std::sqrt(s.hyper_variance) * normal(rng);
      const double y = mu + std::sqrt(s.truth_variance) * normal(rng);

      NormalSpec spec{mu, s.truth_variance};
      switch (s.kind) {
        case ForecasterKind::kIdeal:
          break;
        case ForecasterKind::kUnderconfident:
        case ForecasterKind::kOverconfident:
          spec.variance = s.scale * s.truth_variance;
          break;
        case ForecasterKind::kBiased:
          spec.mean = mu + s.shift;
          break;
        case ForecasterKind::kClimatological:
          spec = {s.hyper_mean, s.hyper_variance + s.truth_variance};
          break;
      }
      spec.mean += s.drift_per_week * (week - mid_week);

      ForecastKey key{name, s.target, location, season, week};
      archive.set_observation(observation_key(key), Observation{y});
      archive.insert(std::move(key), discretize(spec, support));
    }
  }
  return archive;
}

OraclePair oracle_pair(const GaussianScenario& s) {
  const NormalSpec truth{0.0, s.truth_variance};
  switch (s.kind) {
    case ForecasterKind::kIdeal:
      return {truth, truth};
    case ForecasterKind::kUnderconfident:
    case ForecasterKind::kOverconfident:
      return {{0.0, s.scale * s.truth_variance}, truth};
    case ForecasterKind::kBiased:
      return {{s.shift, s.truth_variance}, truth};
    case ForecasterKind::kClimatological: {
      const NormalSpec marginal{s.hyper_mean, s.hyper_variance + s.truth_variance};
      return {marginal, marginal};
    }
  }
  return {truth, truth};
}

ForecastArchive generate(const SplitSignalScenario& s) {
  if (s.signal_variances.empty() || !(s.noise_variance > 0.0) || s.n_per_season < 1 ||
      s.n_seasons < 1 || s.n_weeks < 1) {
    throw Error(ErrorCode::kDomainError, "invalid split-signal scenario");
  }
  double total_variance = s.noise_variance;
  for (double v : s.signal_variances) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kDomainError, "signal variances must be nonnegative");
    total_variance += v;
  }
  if (!(s.support_hi - s.support_lo >= 6.0 * std::sqrt(total_variance))) {
    throw Error(ErrorCode::kDomainError, "support must span six marginal standard deviations");
  }
  const auto support = std::make_shared<const BinSupport>(
      BinSupport::uniform(s.support_lo, s.support_hi, s.bin_width));

  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ForecastArchive archive;
  std::vector<double> signal(s.signal_variances.size());

  for (int season = 1; season <= s.n_seasons; ++season) {
    for (int j = 0; j < s.n_per_season; ++j) {
      const int week = j % s.n_weeks + 1;
      const std::string location = "L" + std::to_string(j / s.n_weeks + 1);
      double y = std::sqrt(s.noise_variance) * normal(rng);
      for (std::size_t k = 0; k < signal.size(); ++k) {
        signal[k] = std::sqrt(s.signal_variances[k]) * normal(rng);
        y += signal[k];
      }
      archive.set_observation({s.target, location, season, week}, Observation{y});
      for (std::size_t k = 0; k < signal.size(); ++k) {
        const NormalSpec spec{signal[k], total_variance - s.signal_variances[k]};
        archive.insert({"C" + std::to_string(k + 1), s.target, location, season, week},
                       discretize(spec, support));
      }
    }
  }
  return archive;
}

double oracle_pit_density(const NormalSpec& forecast, const NormalSpec& truth, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomainError, "PIT density is evaluated on the open interval (0, 1)");
  }
  const bool upper = p > 0.5;
  return std::exp(log_pit_density(forecast, truth, upper ? 1.0 - p : p, upper));
}

double oracle_entropy(const NormalSpec& forecast, const NormalSpec& truth) {
  // The two-argument form hands us the distance to the nearer endpoint, so
  // tails near p = 1 keep full precision.
  auto integrand = [&](double p, double complement) {
    const bool upper = p > 0.5;
    const double tail = upper ? std::abs(complement) : p;
    if (!(tail > 0.0)) return 0.0;
    const double lg = log_pit_density(forecast, truth, tail, upper);
    const double value = std::exp(lg) * lg;
    return std::isfinite(value) ? value : 0.0;
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double integral = integrator.integrate(integrand, 0.0, 1.0, 1e-10, &error, &l1);
  if (!std::isfinite(integral) || error > kQuadratureTolerance) {
    throw Error(ErrorCode::kNonIntegrable, "PIT entropy quadrature did not converge");
  }
  return -integral;
}

double oracle_logscore_gain(const NormalSpec& forecast, const NormalSpec& truth) {
  auto integrand = [&](double y) {
    const double lh = truth.log_pdf(y);
    const double h = std::exp(lh);
    if (h == 0.0) return 0.0;
    return h * (lh - forecast.log_pdf(y));
  };
  double error = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -inf, inf, 15, 1e-12, &error);
  if (!std::isfinite(integral) || error > kQuadratureTolerance) {
    throw Error(ErrorCode::kNonIntegrable, "expected log-score quadrature did not converge");
  }
  return integral;
}

}  // namespace recal
