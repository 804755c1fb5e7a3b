#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace recal {

/// Ordered bin boundaries. Bin k (0-based) covers [edges[k], edges[k+1]);
/// the last bin is closed on both sides.
class BinSupport {
 public:
  /// Throws EmptySupport for fewer than two edges and InvalidSupport when
  /// the edges are not finite and strictly increasing.
  explicit BinSupport(std::vector<double> edges);

  /// Evenly spaced bins of width `width` covering [lo, hi].
  static BinSupport uniform(double lo, double hi, double width);

  std::size_t size() const noexcept { return edges_.size() - 1; }
  std::span<const double> edges() const noexcept { return edges_; }
  double lower() const noexcept { return edges_.front(); }
  double upper() const noexcept { return edges_.back(); }

  friend bool operator==(const BinSupport&, const BinSupport&) = default;

 private:
  std::vector<double> edges_;
};

using SupportPtr = std::shared_ptr<const BinSupport>;

/// Result of looking up a value in a support.
struct BinLocation {
  std::size_t index = 0;
  bool clamped = false;
};

/// Finds the bin containing `y`. Values outside the support are mapped to
/// the nearest boundary bin and flagged, unless `clamp` is false, in which
/// case OutOfSupport is thrown.
BinLocation locate(const BinSupport& support, double y, bool clamp = true);

/// 0-based bin index of `y`; see `locate`.
std::size_t locate_bin(const BinSupport& support, double y, bool clamp = true);

/// Probability masses over a shared bin support.
struct BinnedForecast {
  SupportPtr support;
  std::vector<double> mass;

  std::size_t size() const noexcept { return mass.size(); }
};

/// Checks nonnegativity and unit total mass. Sums within 1e-12 of one are
/// accepted unchanged, sums within 1e-6 are renormalized, anything further
/// raises MassSumOutOfTolerance.
BinnedForecast validate_forecast(BinnedForecast f);

/// Total mass of the first `k` bins, for 0 <= k <= B. cdf_at(f, 0) == 0 and
/// cdf_at(f, B) == 1 exactly.
double cdf_at(const BinnedForecast& f, std::size_t k);

/// All B+1 cumulative values (c_0 = 0, ..., c_B = 1).
std::vector<double> cumulative(const BinnedForecast& f);

struct Observation {
  double value = 0.0;
};

/// Identifies one forecast in an archive.
struct ForecastKey {
  std::string forecaster;
  std::string target;
  std::string location;
  int season = 0;
  int week = 0;

  auto operator<=>(const ForecastKey&) const = default;
  bool operator==(const ForecastKey&) const = default;
};

/// Observations are shared by every forecaster, so they are keyed without one.
struct ObservationKey {
  std::string target;
  std::string location;
  int season = 0;
  int week = 0;

  auto operator<=>(const ObservationKey&) const = default;
  bool operator==(const ObservationKey&) const = default;
};

ObservationKey observation_key(const ForecastKey& key);
std::string to_string(const ForecastKey& key);

/// Keyed collection of forecasts plus the observations they target.
/// All forecasts for one target share a single BinSupport instance.
class ForecastArchive {
 public:
  struct EntryView {
    const ForecastKey& key;
    const BinnedForecast& forecast;
    std::optional<Observation> observation;
  };

  /// Validates `forecast` and stores it. Throws DuplicateKey when the key is
  /// present and SupportMismatch when the target already has another support.
  void insert(ForecastKey key, BinnedForecast forecast);
  void set_observation(ObservationKey key, Observation obs);

  std::size_t size() const noexcept { return forecasts_.size(); }
  bool empty() const noexcept { return forecasts_.empty(); }

  const BinnedForecast* find(const ForecastKey& key) const;
  std::optional<Observation> observation(const ForecastKey& key) const;
  std::optional<Observation> observation(const ObservationKey& key) const;

  /// Support registered for `target`, or null.
  SupportPtr support_for(const std::string& target) const;

  const std::map<ForecastKey, BinnedForecast>& forecasts() const noexcept { return forecasts_; }
  const std::map<ObservationKey, Observation>& observations() const noexcept {
    return observations_;
  }

  std::vector<ForecastKey> keys() const;

 private:
  std::map<ForecastKey, BinnedForecast> forecasts_;
  std::map<ObservationKey, Observation> observations_;
  std::map<std::string, SupportPtr> supports_;
};

}  // namespace recal
