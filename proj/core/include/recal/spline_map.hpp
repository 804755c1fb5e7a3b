#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recal/pit.hpp"

namespace recal {

/// A monotone piecewise-cubic Hermite CDF on [0,1]: G(0) = 0, G(1) = 1,
/// nondecreasing, with derivative g >= uniform_blend everywhere.
///
/// Built by `fit_nonparametric`; the stored knot values and slopes already
/// include the blend with the identity.
class MonotoneCdfMap {
 public:
  /// The identity map G(x) = x.
  MonotoneCdfMap();

  /// Validates the knot layout (x from 0 to 1 strictly increasing, y from 0
  /// to 1 nondecreasing, slopes nonnegative). Throws DomainError otherwise.
  MonotoneCdfMap(std::vector<double> knots_x, std::vector<double> knots_y,
                 std::vector<double> slopes, double uniform_blend);

  /// G(x). Throws DomainError outside [0,1].
  double cdf(double x) const;
  /// g(x) = G'(x). Throws DomainError outside [0,1].
  double density(double x) const;

  std::span<const double> knots_x() const noexcept { return knots_x_; }
  std::span<const double> knots_y() const noexcept { return knots_y_; }
  std::span<const double> slopes() const noexcept { return slopes_; }
  double uniform_blend() const noexcept { return uniform_blend_; }

 private:
  std::size_t segment(double x) const;

  std::vector<double> knots_x_;
  std::vector<double> knots_y_;
  std::vector<double> slopes_;
  double uniform_blend_ = 0.0;
};

double eval_G(const MonotoneCdfMap& m, double x);
double eval_g(const MonotoneCdfMap& m, double x);

/// Fritsch-Carlson tangents for nondecreasing data: three-point averages
/// zeroed at local extrema, then scaled back per segment so the Hermite
/// interpolant cannot overshoot.
std::vector<double> fritsch_carlson_slopes(std::span<const double> x, std::span<const double> y);

/// Default knot count: clamp(ceil(sqrt(n)), 5, 25).
std::size_t default_knot_count(std::size_t n_records);

inline constexpr double kDefaultUniformBlend = 1e-3;
inline constexpr std::size_t kMinFitRecords = 10;

/// Smooths the empirical PIT CDF with a monotone cubic spline through
/// `n_knots` evenly spaced knots, then blends with the identity:
/// G = (1 - blend) * S + blend * x.
///
/// Throws InsufficientData for fewer than 10 PIT values.
MonotoneCdfMap fit_nonparametric(std::span<const double> pits, std::size_t n_knots,
                                 double uniform_blend = kDefaultUniformBlend);
MonotoneCdfMap fit_nonparametric(const PitDataset& d, std::size_t n_knots,
                                 double uniform_blend = kDefaultUniformBlend);

}  // namespace recal
