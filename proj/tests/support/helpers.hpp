#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "recal/forecast.hpp"

namespace recal::testing {

inline SupportPtr support_of(std::vector<double> edges) {
  return std::make_shared<const BinSupport>(std::move(edges));
}

/// Forecast on unit bins [0,1), [1,2), ... sized to the mass vector.
inline BinnedForecast unit_forecast(std::vector<double> mass) {
  std::vector<double> edges(mass.size() + 1);
  std::iota(edges.begin(), edges.end(), 0.0);
  return BinnedForecast{support_of(std::move(edges)), std::move(mass)};
}

/// Kolmogorov-Smirnov distance of a sample to U(0,1).
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, (i + 1) / n - xs[i], xs[i] - i / n});
  }
  return d;
}

/// Asymptotic Kolmogorov survival function P(sqrt(n) D > t).
inline double kolmogorov_pvalue(double d, std::size_t n) {
  const double t = (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace recal::testing
