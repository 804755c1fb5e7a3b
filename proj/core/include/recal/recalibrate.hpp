#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "recal/beta.hpp"
#include "recal/forecast.hpp"
#include "recal/pit.hpp"
#include "recal/spline_map.hpp"

namespace recal {

/// Recalibration components, in ensemble order.
enum class Method { kNonparametric = 0, kBeta = 1, kNull = 2, kEnsemble = 3 };

std::string_view to_string(Method m) noexcept;
/// Accepts "nonparam"/"nonparametric", "beta", "null" and "ensemble".
Method parse_method(std::string_view name);

inline constexpr std::size_t kEnsembleComponents = 3;

struct NullMap {};

/// A CDF-to-CDF transform G on [0,1] applied as F* = G(F).
class CorrectionMap {
 public:
  using Variant = std::variant<MonotoneCdfMap, BetaParams, NullMap>;

  CorrectionMap() = default;
  CorrectionMap(MonotoneCdfMap m) : map_(std::move(m)) {}
  CorrectionMap(BetaParams p) : map_(p) {}
  CorrectionMap(NullMap) {}

  double cdf(double x) const;
  double density(double x) const;

  Method method() const noexcept;
  bool is_null() const noexcept { return std::holds_alternative<NullMap>(map_); }
  const Variant& variant() const noexcept { return map_; }

 private:
  Variant map_{NullMap{}};
};

/// Recalibrated masses G(c_k) - G(c_{k-1}) at the forecast's cumulative
/// boundaries. The null map returns `f` unchanged.
BinnedForecast apply_map(const CorrectionMap& m, const BinnedForecast& f);
/// The same transform restricted to the observed bin.
ObservedCell apply_map(const CorrectionMap& m, const ObservedCell& cell);

/// Simplex weights over recalibration components.
struct EnsembleWeights {
  std::vector<double> w;

  /// Throws DomainError unless every weight is >= 0 and they sum to 1
  /// within 1e-12.
  void validate() const;
};

struct EnsembleFit {
  EnsembleWeights weights;
  double objective = 0.0;  ///< mean log of the mixture observed-bin mass
  int iterations = 0;
  bool converged = false;
  /// Objective at the start and after each update; filled only when
  /// requested since it costs a pass of logs per iteration.
  std::vector<double> objective_trace;
};

struct EmOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
  bool record_trace = false;
};

/// Mean over entries of log(sum_j w_j q_ij), masses clamped at 1e-12.
double ensemble_objective(const std::vector<std::vector<double>>& q, std::span<const double> w);

/// Maximizes `ensemble_objective` over the simplex by multiplicative EM
/// updates w_j <- mean_i(w_j q_ij / sum_k w_k q_ik) from the uniform vector.
/// Stops when no weight moves by 1e-9 or after 10,000 updates.
///
/// `q[i][j]` is component j's mass on entry i's observed bin; every row must
/// have the same length. Throws NoObservations for an empty matrix.
EnsembleFit fit_ensemble_weights(const std::vector<std::vector<double>>& q,
                                 const EmOptions& options = {});

/// Convenience form over full forecasts: `components[i]` holds entry i's
/// recalibrated forecasts, scored at `observations[i]`.
EnsembleFit fit_ensemble(std::span<const std::vector<BinnedForecast>> components,
                         std::span<const Observation> observations,
                         const EmOptions& options = {});

/// Per-bin convex combination. Throws SupportMismatch when the components
/// do not share one support or the weight count differs.
BinnedForecast apply_ensemble(const EnsembleWeights& w, std::span<const BinnedForecast> components);

/// A weighted mixture of correction maps. Its CDF is sum_j w_j G_j, so
/// applying it equals applying every component and mixing the results.
struct EnsembleMap {
  std::vector<CorrectionMap> components;
  EnsembleWeights weights;

  double cdf(double x) const;
  double density(double x) const;
};

BinnedForecast apply_map(const EnsembleMap& m, const BinnedForecast& f);
ObservedCell apply_map(const EnsembleMap& m, const ObservedCell& cell);

}  // namespace recal
