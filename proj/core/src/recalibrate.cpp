#include "recal/recalibrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "recal/error.hpp"
#include "recal/metrics.hpp"

namespace recal {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::kNonparametric: return "nonparam";
    case Method::kBeta: return "beta";
    case Method::kNull: return "null";
    case Method::kEnsemble: return "ensemble";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "nonparam" || name == "nonparametric") return Method::kNonparametric;
  if (name == "beta") return Method::kBeta;
  if (name == "null") return Method::kNull;
  if (name == "ensemble") return Method::kEnsemble;
  throw Error(ErrorCode::kParseError, "unknown method '" + std::string(name) + "'");
}

double CorrectionMap::cdf(double x) const {
  return std::visit(
      [x](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MonotoneCdfMap>) {
          return m.cdf(x);
        } else if constexpr (std::is_same_v<T, BetaParams>) {
          return beta_cdf(m, x);
        } else {
          if (!(x >= 0.0 && x <= 1.0)) {
            throw Error(ErrorCode::kDomainError, "map evaluated outside [0, 1]");
          }
          return x;
        }
      },
      map_);
}

double CorrectionMap::density(double x) const {
  return std::visit(
      [x](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MonotoneCdfMap>) {
          return m.density(x);
        } else if constexpr (std::is_same_v<T, BetaParams>) {
          return beta_pdf(m, x);
        } else {
          if (!(x >= 0.0 && x <= 1.0)) {
            throw Error(ErrorCode::kDomainError, "map evaluated outside [0, 1]");
          }
          return 1.0;
        }
      },
      map_);
}

Method CorrectionMap::method() const noexcept {
  switch (map_.index()) {
    case 0: return Method::kNonparametric;
    case 1: return Method::kBeta;
    default: return Method::kNull;
  }
}

namespace {

// Differences G at the cumulative boundaries of f; G(0) = 0 and G(1) = 1
// are used exactly so the result telescopes to one.
template <typename Cdf>
BinnedForecast difference_cdf(const Cdf& cdf, const BinnedForecast& f) {
  const std::vector<double> c = cumulative(f);
  BinnedForecast out{f.support, std::vector<double>(f.mass.size())};
  double prev = 0.0;
  for (std::size_t k = 0; k < f.mass.size(); ++k) {
    const double next = (k + 1 == f.mass.size()) ? 1.0 : cdf(c[k + 1]);
    out.mass[k] = std::max(0.0, next - prev);
    prev = std::max(prev, next);
  }
  return out;
}

template <typename Cdf>
ObservedCell transform_cell(const Cdf& cdf, const ObservedCell& cell) {
  const double lo = cdf(std::clamp(cell.below, 0.0, 1.0));
  const double hi = cdf(cell.above());
  return {lo, std::max(0.0, hi - lo), cell.clamped, cell.top};
}

}  // namespace

BinnedForecast apply_map(const CorrectionMap& m, const BinnedForecast& f) {
  if (m.is_null()) return f;
  return difference_cdf([&m](double x) { return m.cdf(x); }, f);
}

ObservedCell apply_map(const CorrectionMap& m, const ObservedCell& cell) {
  if (m.is_null()) return cell;
  return transform_cell([&m](double x) { return m.cdf(x); }, cell);
}

void EnsembleWeights::validate() const {
  if (w.empty()) {
    throw Error(ErrorCode::kDomainError, "ensemble needs at least one weight");
  }
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kDomainError, "ensemble weights must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::kDomainError, "ensemble weights must sum to one");
  }
}

double ensemble_objective(const std::vector<std::vector<double>>& q, std::span<const double> w) {
  if (q.empty()) {
    throw Error(ErrorCode::kNoObservations, "ensemble objective over no entries");
  }
  double total = 0.0;
  for (const auto& row : q) {
    double mix = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) mix += w[j] * std::max(row[j], kMassClamp);
    total += std::log(mix);
  }
  return total / static_cast<double>(q.size());
}

EnsembleFit fit_ensemble_weights(const std::vector<std::vector<double>>& q,
                                 const EmOptions& options) {
  if (q.empty()) {
    throw Error(ErrorCode::kNoObservations, "no entries to fit ensemble weights");
  }
  const std::size_t p = q.front().size();
  if (p == 0) {
    throw Error(ErrorCode::kDomainError, "ensemble needs at least one component");
  }
  for (const auto& row : q) {
    if (row.size() != p) throw Error(ErrorCode::kSupportMismatch, "ragged component mass matrix");
  }
  const double n = static_cast<double>(q.size());

  // Clamped copy, row-major.
  std::vector<double> mass(q.size() * p);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) mass[i * p + j] = std::max(q[i][j], kMassClamp);
  }

  EnsembleFit fit;
  std::vector<double> w(p, 1.0 / static_cast<double>(p));
  std::vector<double> next(p);
  if (options.record_trace) fit.objective_trace.push_back(ensemble_objective(q, w));

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double* row = &mass[i * p];
      double mix = 0.0;
      for (std::size_t j = 0; j < p; ++j) mix += w[j] * row[j];
      const double inv = 1.0 / mix;
      for (std::size_t j = 0; j < p; ++j) next[j] += row[j] * inv;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      next[j] *= w[j] / n;
      total += next[j];
    }
    double change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      next[j] /= total;  // removes rounding drift off the simplex
      change = std::max(change, std::abs(next[j] - w[j]));
    }
    w.swap(next);
    fit.iterations = iter + 1;
    if (options.record_trace) fit.objective_trace.push_back(ensemble_objective(q, w));
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.weights.w = w;
  fit.objective = ensemble_objective(q, w);
  return fit;
}

EnsembleFit fit_ensemble(std::span<const std::vector<BinnedForecast>> components,
                         std::span<const Observation> observations,
                         const EmOptions& options) {
  if (components.size() != observations.size()) {
    throw Error(ErrorCode::kKeyMisalignment, "one observation per entry is required");
  }
  std::vector<std::vector<double>> q;
  q.reserve(components.size());
  for (std::size_t i = 0; i < components.size(); ++i) {
    std::vector<double> row;
    row.reserve(components[i].size());
    for (const auto& f : components[i]) {
      row.push_back(f.mass[locate_bin(*f.support, observations[i].value)]);
    }
    q.push_back(std::move(row));
  }
  return fit_ensemble_weights(q, options);
}

BinnedForecast apply_ensemble(const EnsembleWeights& w, std::span<const BinnedForecast> components) {
  w.validate();
  if (components.size() != w.w.size()) {
    throw Error(ErrorCode::kSupportMismatch, "weight count differs from component count");
  }
  const BinnedForecast& first = components.front();
  for (const auto& f : components) {
    if (f.mass.size() != first.mass.size() ||
        (f.support != first.support && !(*f.support == *first.support))) {
      throw Error(ErrorCode::kSupportMismatch, "ensemble components use different supports");
    }
  }
  BinnedForecast out{first.support, std::vector<double>(first.mass.size(), 0.0)};
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (w.w[j] == 0.0) continue;
    for (std::size_t k = 0; k < out.mass.size(); ++k) out.mass[k] += w.w[j] * components[j].mass[k];
  }
  return out;
}

double EnsembleMap::cdf(double x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (weights.w[j] != 0.0) total += weights.w[j] * components[j].cdf(x);
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return std::clamp(total, 0.0, 1.0);
}

double EnsembleMap::density(double x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (weights.w[j] != 0.0) total += weights.w[j] * components[j].density(x);
  }
  return total;
}

BinnedForecast apply_map(const EnsembleMap& m, const BinnedForecast& f) {
  return difference_cdf([&m](double x) { return m.cdf(x); }, f);
}

ObservedCell apply_map(const EnsembleMap& m, const ObservedCell& cell) {
  return transform_cell([&m](double x) { return m.cdf(x); }, cell);
}

}  // namespace recal
