#include "recal/spline_map.hpp"

#include <algorithm>
#include <cmath>

#include "recal/error.hpp"

namespace recal {

MonotoneCdfMap::MonotoneCdfMap() : knots_x_{0.0, 1.0}, knots_y_{0.0, 1.0}, slopes_{1.0, 1.0} {}

MonotoneCdfMap::MonotoneCdfMap(std::vector<double> knots_x, std::vector<double> knots_y,
                               std::vector<double> slopes, double uniform_blend)
    : knots_x_(std::move(knots_x)),
      knots_y_(std::move(knots_y)),
      slopes_(std::move(slopes)),
      uniform_blend_(uniform_blend) {
  const std::size_t n = knots_x_.size();
  if (n < 2 || knots_y_.size() != n || slopes_.size() != n) {
    throw Error(ErrorCode::kDomainError, "spline needs >= 2 knots with matching values and slopes");
  }
  if (knots_x_.front() != 0.0 || knots_x_.back() != 1.0 || knots_y_.front() != 0.0 ||
      knots_y_.back() != 1.0) {
    throw Error(ErrorCode::kDomainError, "spline must run from (0,0) to (1,1)");
  }
  if (!(uniform_blend_ >= 0.0 && uniform_blend_ <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "uniform blend must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(slopes_[i] >= 0.0) || !std::isfinite(slopes_[i])) {
      throw Error(ErrorCode::kDomainError, "spline slopes must be finite and nonnegative");
    }
    if (i > 0 && (!(knots_x_[i] > knots_x_[i - 1]) || knots_y_[i] < knots_y_[i - 1])) {
      throw Error(ErrorCode::kDomainError, "spline knots must be increasing and monotone");
    }
  }
}

std::size_t MonotoneCdfMap::segment(double x) const {
  const auto it = std::upper_bound(knots_x_.begin(), knots_x_.end(), x);
  const auto idx = static_cast<std::size_t>(it - knots_x_.begin());
  return std::clamp<std::size_t>(idx, 1, knots_x_.size() - 1) - 1;
}

double MonotoneCdfMap::cdf(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "map evaluated outside [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const std::size_t j = segment(x);
  const double h = knots_x_[j + 1] - knots_x_[j];
  const double t = (x - knots_x_[j]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  const double value = h00 * knots_y_[j] + h10 * h * slopes_[j] + h01 * knots_y_[j + 1] +
                       h11 * h * slopes_[j + 1];
  return std::clamp(value, knots_y_[j], knots_y_[j + 1]);
}

double MonotoneCdfMap::density(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "map density evaluated outside [0, 1]");
  }
  const std::size_t j = segment(x);
  const double h = knots_x_[j + 1] - knots_x_[j];
  const double t = (x - knots_x_[j]) / h;
  const double t2 = t * t;
  const double d00 = (6.0 * t2 - 6.0 * t) / h;
  const double d10 = 3.0 * t2 - 4.0 * t + 1.0;
  const double d01 = (-6.0 * t2 + 6.0 * t) / h;
  const double d11 = 3.0 * t2 - 2.0 * t;
  const double value =
      d00 * knots_y_[j] + d10 * slopes_[j] + d01 * knots_y_[j + 1] + d11 * slopes_[j + 1];
  return std::max(value, uniform_blend_);
}

double eval_G(const MonotoneCdfMap& m, double x) { return m.cdf(x); }
double eval_g(const MonotoneCdfMap& m, double x) { return m.density(x); }

std::vector<double> fritsch_carlson_slopes(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> secant(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    secant[k] = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
  }
  d.front() = secant.front();
  d.back() = secant.back();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double left = secant[k - 1];
    const double right = secant[k];
    d[k] = (left * right <= 0.0) ? 0.0 : 0.5 * (left + right);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (secant[k] == 0.0) {
      d[k] = 0.0;
      d[k + 1] = 0.0;
      continue;
    }
    const double a = d[k] / secant[k];
    const double b = d[k + 1] / secant[k];
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      d[k] = tau * a * secant[k];
      d[k + 1] = tau * b * secant[k];
    }
  }
  return d;
}

std::size_t default_knot_count(std::size_t n_records) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_records))));
  return std::clamp<std::size_t>(root, 5, 25);
}

MonotoneCdfMap fit_nonparametric(std::span<const double> pits, std::size_t n_knots,
                                 double uniform_blend) {
  if (pits.size() < kMinFitRecords) {
    throw Error(ErrorCode::kInsufficientData, "nonparametric fit needs at least 10 PIT values");
  }
  if (n_knots < 2) {
    throw Error(ErrorCode::kDomainError, "nonparametric fit needs at least 2 knots");
  }
  if (!(uniform_blend >= 0.0 && uniform_blend <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "uniform blend must lie in [0, 1]");
  }
  std::vector<double> sorted(pits.begin(), pits.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  std::vector<double> x(n_knots);
  std::vector<double> ecdf(n_knots);
  for (std::size_t j = 0; j < n_knots; ++j) {
    x[j] = static_cast<double>(j) / static_cast<double>(n_knots - 1);
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), x[j]) - sorted.begin();
    ecdf[j] = static_cast<double>(count) / n;
  }
  x.back() = 1.0;
  ecdf.front() = 0.0;
  ecdf.back() = 1.0;

  // Hermite interpolation is linear in (values, slopes), and the identity is
  // reproduced exactly by values x_j with unit slopes, so blending the data
  // and the tangents blends the interpolants.
  const std::vector<double> raw_slopes = fritsch_carlson_slopes(x, ecdf);
  std::vector<double> y(n_knots);
  std::vector<double> slopes(n_knots);
  for (std::size_t j = 0; j < n_knots; ++j) {
    y[j] = (1.0 - uniform_blend) * ecdf[j] + uniform_blend * x[j];
    slopes[j] = (1.0 - uniform_blend) * raw_slopes[j] + uniform_blend;
  }
  y.front() = 0.0;
  y.back() = 1.0;
  return MonotoneCdfMap(std::move(x), std::move(y), std::move(slopes), uniform_blend);
}

MonotoneCdfMap fit_nonparametric(const PitDataset& d, std::size_t n_knots, double uniform_blend) {
  const auto values = d.values();
  return fit_nonparametric(values, n_knots, uniform_blend);
}

}  // namespace recal
