#include "recal/beta.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "recal/error.hpp"

namespace recal {

namespace {

constexpr double kAsymptoticStart = 10.0;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::kDomainError, what);
  }
}

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma needs a positive finite argument");
  double acc = 0.0;
  while (x < kAsymptoticStart) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  // Bernoulli-number series in 1/x^2.
  const double series =
      r * (1.0 / 12 -
           r * (1.0 / 120 -
                r * (1.0 / 252 -
                     r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r * (1.0 / 12)))))));
  return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma needs a positive finite argument");
  double acc = 0.0;
  while (x < kAsymptoticStart) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  const double series =
      1.0 / 6 -
      r * (1.0 / 30 - r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730)))));
  return acc + 1.0 / x + 0.5 * r + series * r / x;
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace {

double incomplete_beta_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 4.0 * std::numeric_limits<double>::epsilon();
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::kNonIntegrable, "incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  require_positive(a, "incomplete beta needs a > 0");
  require_positive(b, "incomplete beta needs b > 0");
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "incomplete beta argument outside [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::clamp(front * incomplete_beta_fraction(a, b, x) / a, 0.0, 1.0);
  }
  return std::clamp(1.0 - front * incomplete_beta_fraction(b, a, 1.0 - x) / b, 0.0, 1.0);
}

double beta_pdf(const BetaParams& p, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "beta density evaluated outside [0, 1]");
  }
  const double xc = std::clamp(x, p.delta, 1.0 - p.delta);
  return std::exp((p.alpha - 1.0) * std::log(xc) + (p.beta - 1.0) * std::log1p(-xc) -
                  log_beta(p.alpha, p.beta));
}

double beta_cdf(const BetaParams& p, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "beta CDF evaluated outside [0, 1]");
  }
  return regularized_incomplete_beta(p.alpha, p.beta, x);
}

double beta_mean_log_likelihood(double alpha, double beta, double mean_log_x,
                                double mean_log_1mx) {
  return (alpha - 1.0) * mean_log_x + (beta - 1.0) * mean_log_1mx - log_beta(alpha, beta);
}

BetaFit fit_beta_mle(std::span<const double> pits, double delta) {
  if (pits.size() < kMinBetaRecords) {
    throw Error(ErrorCode::kInsufficientData, "beta fit needs at least 10 PIT values");
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    throw Error(ErrorCode::kDomainError, "beta clamp delta must lie in (0, 0.5)");
  }
  const double n = static_cast<double>(pits.size());
  double sum = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  for (double p : pits) {
    const double x = std::clamp(p, delta, 1.0 - delta);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
    s1 += std::log(x);
    s2 += std::log1p(-x);
  }
  const double mean = sum / n;
  s1 /= n;
  s2 /= n;
  double var = 0.0;
  for (double p : pits) {
    const double x = std::clamp(p, delta, 1.0 - delta);
    var += (x - mean) * (x - mean);
  }
  var /= n;
  if (!(lo < hi) || !(var > 0.0)) {
    throw Error(ErrorCode::kDegenerateData, "PIT values have zero variance");
  }

  BetaFit fit;
  const double common = mean * (1.0 - mean) / var - 1.0;
  // Clamped data always has var < mean(1-mean); guard the degenerate limit.
  const double scale = common > 0.0 ? common : 1.0;
  fit.moments = {mean * scale, (1.0 - mean) * scale, delta};
  fit.moments_log_likelihood =
      beta_mean_log_likelihood(fit.moments.alpha, fit.moments.beta, s1, s2);

  double a = fit.moments.alpha;
  double b = fit.moments.beta;
  double ll = fit.moments_log_likelihood;
  bool diverged = !std::isfinite(ll);

  for (int iter = 0; iter < 100 && !diverged; ++iter) {
    const double psi_ab = digamma(a + b);
    const std::array<double, 2> grad = {s1 - digamma(a) + psi_ab, s2 - digamma(b) + psi_ab};
    if (std::max(std::abs(grad[0]), std::abs(grad[1])) < 1e-10) {
      fit.converged = true;
      break;
    }
    fit.iterations = iter + 1;
    const double tri_ab = trigamma(a + b);
    const double haa = tri_ab - trigamma(a);
    const double hbb = tri_ab - trigamma(b);
    const double hab = tri_ab;
    const double det = haa * hbb - hab * hab;
    if (!std::isfinite(det) || det == 0.0) {
      diverged = true;
      break;
    }
    // Newton step: -H^{-1} grad.
    const double step_a = -(hbb * grad[0] - hab * grad[1]) / det;
    const double step_b = -(-hab * grad[0] + haa * grad[1]) / det;

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
      const double na = a + t * step_a;
      const double nb = b + t * step_b;
      if (!(na > 0.0 && nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb)) continue;
      const double nll = beta_mean_log_likelihood(na, nb, s1, s2);
      if (std::isfinite(nll) && nll >= ll) {
        a = na;
        b = nb;
        ll = nll;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent along the Newton direction: we are at the optimum to
      // working precision, or the iteration has broken down.
      const double gnorm = std::max(std::abs(grad[0]), std::abs(grad[1]));
      if (gnorm < 1e-6) {
        fit.converged = true;
      } else {
        diverged = true;
      }
      break;
    }
  }

  if (diverged) {
    fit.used_fallback = true;
    fit.params = fit.moments;
    fit.log_likelihood = fit.moments_log_likelihood;
  } else {
    fit.params = {a, b, delta};
    fit.log_likelihood = ll;
  }
  if (fit.params.alpha > kBetaParamCap || fit.params.beta > kBetaParamCap) {
    throw Error(ErrorCode::kParameterOutOfRange, "beta parameters exceed the 1e4 cap");
  }
  return fit;
}

BetaFit fit_beta_mle(const PitDataset& d, double delta) {
  const auto values = d.values();
  return fit_beta_mle(values, delta);
}

}  // namespace recal
