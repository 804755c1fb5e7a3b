#include "recal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "recal/error.hpp"

namespace recal {

double log_score_of_mass(double mass, std::optional<double> floor) {
  const double score = std::log(std::max(mass, kMassClamp));
  return floor ? std::max(score, *floor) : score;
}

double log_score(const BinnedForecast& f, Observation y, std::optional<double> floor) {
  return log_score_of_mass(f.mass[locate_bin(*f.support, y.value)], floor);
}

std::size_t entropy_bin(double pit, std::size_t n_bins) {
  const double scaled = std::clamp(pit, 0.0, 1.0) * static_cast<double>(n_bins);
  return std::min(static_cast<std::size_t>(scaled), n_bins - 1);
}

EntropyEstimate pit_entropy(std::span<const double> pits, std::size_t n_bins) {
  if (pits.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "entropy of an empty PIT sample");
  }
  if (n_bins == 0) {
    throw Error(ErrorCode::kDomainError, "entropy needs at least one bin");
  }
  std::vector<std::size_t> counts(n_bins, 0);
  for (double p : pits) ++counts[entropy_bin(p, n_bins)];

  const double n = static_cast<double>(pits.size());
  const double bins = static_cast<double>(n_bins);
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(bins * p);
  }
  // Clamp rounding residue so the estimate stays in [-log(n_bins), 0].
  h = std::clamp(h, -std::log(bins), 0.0);
  return {h, pits.size(), n_bins};
}

EntropyEstimate pit_entropy(const PitDataset& d, std::size_t n_bins) {
  const auto values = d.values();
  return pit_entropy(values, n_bins);
}

namespace {

// Linear interpolation between order statistics (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

EntropyBand uniform_entropy_band(std::size_t n_samples, std::size_t n_bins, double coverage,
                                 std::size_t n_mc, std::uint64_t seed) {
  if (n_samples == 0 || n_mc == 0) {
    throw Error(ErrorCode::kDomainError, "entropy band needs n_samples >= 1 and n_mc >= 1");
  }
  if (!(coverage >= 0.0 && coverage <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "coverage must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> sample(n_samples);
  std::vector<double> entropies(n_mc);
  for (auto& e : entropies) {
    for (auto& u : sample) u = unif(rng);
    e = pit_entropy(sample, n_bins).value;
  }
  std::sort(entropies.begin(), entropies.end());
  const double tail = 0.5 * (1.0 - coverage);
  return {quantile_sorted(entropies, tail), quantile_sorted(entropies, 1.0 - tail)};
}

double mean_log_score(const ForecastArchive& archive, std::span<const ForecastKey> keys,
                      std::optional<double> floor) {
  if (keys.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "mean log score over no entries");
  }
  double total = 0.0;
  for (const auto& key : keys) {
    const BinnedForecast* f = archive.find(key);
    const auto obs = archive.observation(key);
    if (f == nullptr || !obs) {
      throw Error(ErrorCode::kMissingObservation, to_string(key));
    }
    total += log_score(*f, *obs, floor);
  }
  return total / static_cast<double>(keys.size());
}

}  // namespace recal
