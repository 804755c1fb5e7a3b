#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "recal/forecast.hpp"
#include "recal/pit.hpp"

namespace recal {

/// Masses below this are raised to it before taking logs.
inline constexpr double kMassClamp = 1e-12;

/// Log of the mass assigned to the observed bin (natural log), after the
/// 1e-12 clamp, and then raised to `floor` when one is given.
double log_score(const BinnedForecast& f, Observation y, std::optional<double> floor = std::nullopt);

/// Same rule applied to a bare observed-bin mass.
double log_score_of_mass(double mass, std::optional<double> floor = std::nullopt);

/// Histogram estimate of the PIT entropy, in nats.
struct EntropyEstimate {
  double value = 0.0;  ///< in [-log(n_bins), 0]
  std::size_t n_samples = 0;
  std::size_t n_bins = 0;
};

/// -sum_b p_b log(n_bins p_b) over equal-width bins of [0,1]. A PIT of
/// exactly 1 lands in the last bin. Throws EmptyDataset.
EntropyEstimate pit_entropy(std::span<const double> pits, std::size_t n_bins = 100);
EntropyEstimate pit_entropy(const PitDataset& d, std::size_t n_bins = 100);

/// Histogram bin of a PIT value under the `pit_entropy` binning.
std::size_t entropy_bin(double pit, std::size_t n_bins);

struct EntropyBand {
  double lo = 0.0;
  double hi = 0.0;
};

/// Central `coverage` interval of `pit_entropy` over `n_mc` Monte Carlo
/// samples of `n_samples` standard uniforms. Deterministic in `seed`.
EntropyBand uniform_entropy_band(std::size_t n_samples, std::size_t n_bins = 100,
                                 double coverage = 0.90, std::size_t n_mc = 2000,
                                 std::uint64_t seed = 0);

/// Mean of `log_score` over `keys`. Throws EmptyDataset for no keys and
/// MissingObservation when any key lacks an observation or forecast.
double mean_log_score(const ForecastArchive& archive, std::span<const ForecastKey> keys,
                      std::optional<double> floor = std::nullopt);

}  // namespace recal
