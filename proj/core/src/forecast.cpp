#include "recal/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "recal/error.hpp"

namespace recal {

BinSupport::BinSupport(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) {
    throw Error(ErrorCode::kEmptySupport, "a support needs at least two edges");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (!std::isfinite(edges_[i])) {
      throw Error(ErrorCode::kInvalidSupport, "non-finite bin edge");
    }
    if (i > 0 && !(edges_[i] > edges_[i - 1])) {
      throw Error(ErrorCode::kInvalidSupport, "bin edges must be strictly increasing");
    }
  }
}

BinSupport BinSupport::uniform(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) {
    throw Error(ErrorCode::kInvalidSupport, "uniform support needs lo < hi and width > 0");
  }
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / width));
  std::vector<double> edges(std::max<std::size_t>(n, 1) + 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = lo + static_cast<double>(i) * width;
  }
  edges.back() = hi;
  return BinSupport(std::move(edges));
}

BinLocation locate(const BinSupport& support, double y, bool clamp) {
  const auto edges = support.edges();
  const std::size_t bins = support.size();
  if (std::isnan(y)) {
    throw Error(ErrorCode::kOutOfSupport, "observation is NaN");
  }
  if (y < edges.front() || y > edges.back()) {
    if (!clamp) {
      std::ostringstream msg;
      msg << "value " << y << " outside [" << edges.front() << ", " << edges.back() << "]";
      throw Error(ErrorCode::kOutOfSupport, msg.str());
    }
    return {y < edges.front() ? 0 : bins - 1, true};
  }
  // First edge strictly greater than y closes y's bin on the right.
  const auto it = std::upper_bound(edges.begin(), edges.end(), y);
  if (it == edges.end()) {
    return {bins - 1, false};
  }
  return {static_cast<std::size_t>(it - edges.begin()) - 1, false};
}

std::size_t locate_bin(const BinSupport& support, double y, bool clamp) {
  return locate(support, y, clamp).index;
}

BinnedForecast validate_forecast(BinnedForecast f) {
  if (!f.support || f.mass.empty()) {
    throw Error(ErrorCode::kEmptySupport, "forecast has no bins");
  }
  if (f.mass.size() != f.support->size()) {
    throw Error(ErrorCode::kSupportMismatch, "mass count differs from bin count");
  }
  double sum = 0.0;
  for (double m : f.mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::kNegativeMass, "masses must be finite and nonnegative");
    }
    sum += m;
  }
  const double err = std::abs(sum - 1.0);
  if (err > 1e-6) {
    std::ostringstream msg;
    msg << "masses sum to " << sum;
    throw Error(ErrorCode::kMassSumOutOfTolerance, msg.str());
  }
  if (err > 1e-12) {
    for (double& m : f.mass) m /= sum;
  }
  return f;
}

double cdf_at(const BinnedForecast& f, std::size_t k) {
  if (k > f.mass.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "cdf index beyond bin count");
  }
  if (k == f.mass.size()) return 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += f.mass[i];
  return std::min(acc, 1.0);
}

std::vector<double> cumulative(const BinnedForecast& f) {
  std::vector<double> c(f.mass.size() + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.mass.size(); ++i) {
    c[i] = std::min(acc, 1.0);
    acc += f.mass[i];
  }
  c.back() = 1.0;
  return c;
}

ObservationKey observation_key(const ForecastKey& key) {
  return {key.target, key.location, key.season, key.week};
}

std::string to_string(const ForecastKey& key) {
  std::ostringstream out;
  out << key.forecaster << ',' << key.target << ',' << key.location << ',' << key.season << ','
      << key.week;
  return out.str();
}

void ForecastArchive::insert(ForecastKey key, BinnedForecast forecast) {
  forecast = validate_forecast(std::move(forecast));
  auto& registered = supports_[key.target];
  if (!registered) {
    registered = forecast.support;
  } else if (registered != forecast.support) {
    if (!(*registered == *forecast.support)) {
      throw Error(ErrorCode::kSupportMismatch, "target '" + key.target + "' has a different support");
    }
    forecast.support = registered;
  }
  const std::string label = to_string(key);
  const auto [it, inserted] = forecasts_.emplace(std::move(key), std::move(forecast));
  if (!inserted) {
    throw Error(ErrorCode::kDuplicateKey, label);
  }
}

void ForecastArchive::set_observation(ObservationKey key, Observation obs) {
  observations_[std::move(key)] = obs;
}

const BinnedForecast* ForecastArchive::find(const ForecastKey& key) const {
  const auto it = forecasts_.find(key);
  return it == forecasts_.end() ? nullptr : &it->second;
}

std::optional<Observation> ForecastArchive::observation(const ForecastKey& key) const {
  return observation(observation_key(key));
}

std::optional<Observation> ForecastArchive::observation(const ObservationKey& key) const {
  const auto it = observations_.find(key);
  if (it == observations_.end()) return std::nullopt;
  return it->second;
}

SupportPtr ForecastArchive::support_for(const std::string& target) const {
  const auto it = supports_.find(target);
  return it == supports_.end() ? nullptr : it->second;
}

std::vector<ForecastKey> ForecastArchive::keys() const {
  std::vector<ForecastKey> out;
  out.reserve(forecasts_.size());
  for (const auto& [key, _] : forecasts_) out.push_back(key);
  return out;
}

}  // namespace recal
