#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "recal/forecast.hpp"

namespace recal {

enum class PitMode {
  kMidBin,      ///< cumulative mass below the observed bin plus half its mass
  kRandomized,  ///< the half is replaced by a seeded uniform draw
};

struct PitOptions {
  PitMode mode = PitMode::kMidBin;
  std::uint64_t seed = 0;
};

/// The observed bin of a forecast, reduced to the two numbers every
/// CDF-level computation needs: the forecast CDF just below the bin and the
/// bin's mass.
struct ObservedCell {
  double below = 0.0;
  double mass = 0.0;
  bool clamped = false;
  bool top = false;  ///< the observed bin is the last one, so above() is exactly 1

  double above() const noexcept;
  /// PIT at relative position `u` in [0,1] inside the bin.
  double pit(double u = 0.5) const noexcept;
};

ObservedCell observed_cell(const BinnedForecast& f, Observation y);

/// PIT of a single forecast. Randomized mode draws u from a generator seeded
/// with `options.seed`.
double compute_pit(const BinnedForecast& f, Observation y, const PitOptions& options = {});

struct PitRecord {
  ForecastKey key;
  double pit = 0.0;
};

struct PitDataset {
  std::vector<PitRecord> records;
  /// Keys whose observation fell outside the support and was clamped.
  std::vector<ForecastKey> clamped;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  std::vector<double> values() const;
};

using KeyPredicate = std::function<bool(const ForecastKey&)>;

/// One record per archive entry accepted by `filter`, in key order. Throws
/// MissingObservation naming every selected key without an observation.
PitDataset build_pit_dataset(const ForecastArchive& archive, const KeyPredicate& filter,
                             const PitOptions& options = {});

/// Accepts entries of `target` (any forecaster, any location) whose week is
/// within `half_width` of `week` and whose season is not excluded. Windows
/// are truncated at season boundaries, never wrapped.
KeyPredicate window_select(std::string target, int week, int half_width,
                           std::set<int> exclude_seasons = {});

}  // namespace recal
