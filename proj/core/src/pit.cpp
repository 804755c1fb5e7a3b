#include "recal/pit.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "recal/error.hpp"

namespace recal {

double ObservedCell::above() const noexcept {
  return top ? 1.0 : std::min(1.0, below + mass);
}

double ObservedCell::pit(double u) const noexcept {
  return std::clamp(below + u * mass, 0.0, 1.0);
}

ObservedCell observed_cell(const BinnedForecast& f, Observation y) {
  const BinLocation loc = locate(*f.support, y.value);
  return {cdf_at(f, loc.index), f.mass[loc.index], loc.clamped, loc.index + 1 == f.size()};
}

double compute_pit(const BinnedForecast& f, Observation y, const PitOptions& options) {
  const ObservedCell cell = observed_cell(f, y);
  if (options.mode == PitMode::kMidBin) return cell.pit(0.5);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return cell.pit(unif(rng));
}

std::vector<double> PitDataset::values() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.pit);
  return out;
}

PitDataset build_pit_dataset(const ForecastArchive& archive, const KeyPredicate& filter,
                             const PitOptions& options) {
  PitDataset out;
  std::vector<ForecastKey> missing;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (const auto& [key, forecast] : archive.forecasts()) {
    if (filter && !filter(key)) continue;
    const auto obs = archive.observation(key);
    if (!obs) {
      missing.push_back(key);
      continue;
    }
    const ObservedCell cell = observed_cell(forecast, *obs);
    const double u = options.mode == PitMode::kMidBin ? 0.5 : unif(rng);
    out.records.push_back({key, cell.pit(u)});
    if (cell.clamped) out.clamped.push_back(key);
  }

  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " selected entries lack observations:";
    for (const auto& k : missing) msg << "\n  " << to_string(k);
    throw Error(ErrorCode::kMissingObservation, msg.str());
  }
  return out;
}

KeyPredicate window_select(std::string target, int week, int half_width,
                           std::set<int> exclude_seasons) {
  if (half_width < 0) {
    throw Error(ErrorCode::kDomainError, "window half-width must be nonnegative");
  }
  return [target = std::move(target), week, half_width,
          excluded = std::move(exclude_seasons)](const ForecastKey& key) {
    return key.target == target && key.week >= week - half_width &&
           key.week <= week + half_width && !excluded.contains(key.season);
  };
}

}  // namespace recal
