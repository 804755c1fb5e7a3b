#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recal/forecast.hpp"
#include "recal/metrics.hpp"
#include "recal/pit.hpp"
#include "recal/recalibrate.hpp"

namespace recal {

struct CvConfig {
  int window_k = 3;              ///< training weeks [i - k, i + k]
  PitOptions pit;                ///< PIT convention for training and reporting
  std::size_t n_knots = 0;       ///< 0 selects `default_knot_count`
  double uniform_blend = kDefaultUniformBlend;
  double beta_delta = kBetaClamp;
  std::optional<double> score_floor;
  std::size_t entropy_bins = 100;
  std::size_t band_samples = 2000;
  double band_coverage = 0.90;
  std::uint64_t seed = 0;        ///< seeds the uniform-entropy band

  void validate() const;
};

/// Fits the three ensemble components (nonparametric, beta, null) to one
/// training set. Throws InsufficientData/DegenerateData like the fits do.
std::array<CorrectionMap, kEnsembleComponents> fit_components(std::span<const double> pits,
                                                              const CvConfig& cfg);

/// One forecast reduced to its observed bin.
struct CvEntry {
  ForecastKey key;
  ObservedCell cell;
  double u = 0.5;  ///< position inside the observed bin used for PITs

  double pit() const noexcept { return cell.pit(u); }
};

/// Observed cells for every entry of (forecaster, target), in key order.
/// Throws MissingObservation when any of them lacks an observation.
std::vector<CvEntry> collect_entries(const ForecastArchive& archive, const std::string& forecaster,
                                     const std::string& target, const PitOptions& pit);

/// Training seasons that actually contributed PITs to one fit stage.
struct StageLog {
  int held_season = 0;            ///< r for inner stages, s for the outer stage
  std::set<int> training_seasons;
  std::size_t n_training = 0;     ///< PIT records summed over weeks
  std::size_t n_recalibrated = 0;
};

struct FoldLog {
  int test_season = 0;
  std::vector<StageLog> inner;    ///< step 1, one per r != s
  StageLog outer;                 ///< step 3
  EnsembleWeights weights;        ///< step 2, fitted without season s
  std::set<int> weight_seasons;   ///< seasons whose entries fitted `weights`
  bool skipped = false;
  std::string reason;
  std::size_t n_scored = 0;
};

struct FitFailure {
  int test_season = 0;
  int held_season = 0;
  int week = 0;
  std::string reason;
};

/// A week whose outer training PITs pile into the histogram bin holding 0.5.
struct FlaggedWeek {
  int test_season = 0;
  int week = 0;
  double central_fraction = 0.0;
};

struct MethodSummary {
  Method method = Method::kNull;
  double mean_log_score = 0.0;
  double pit_entropy = 0.0;
};

/// Held-out evaluation of one (forecaster, target). Every "after" number is
/// computed on test-season forecasts recalibrated without that season.
struct EvaluationReport {
  std::string forecaster;
  std::string target;
  int window_k = 0;
  std::size_t n_entries = 0;
  std::size_t n_scored = 0;
  double mean_log_score_before = 0.0;
  double pit_entropy_before = 0.0;
  std::vector<MethodSummary> after;  ///< nonparam, beta, null, ensemble
  EntropyBand uniform_band;
  std::vector<FoldLog> folds;
  std::vector<FitFailure> failures;
  std::vector<FlaggedWeek> flagged_weeks;

  const MethodSummary& summary(Method m) const;
};

struct HeldOutEntry {
  ForecastKey key;
  ObservedCell original;
  std::array<ObservedCell, 4> recalibrated;  ///< indexed by Method
  double u = 0.5;
};

struct LosoResult {
  EvaluationReport report;
  std::vector<HeldOutEntry> held_out;  ///< scored entries only, key order
};

/// Nested leave-one-season-out recalibration over prepared entries (all of
/// one forecaster and target). For every test season s:
///   1. each other season r is recalibrated by all three components, trained
///      on seasons outside {r, s} in the week window, all locations;
///   2. ensemble weights are fitted on those step-1 forecasts;
///   3. season s is recalibrated, trained on every season but s;
///   4. the step-3 components are mixed with the step-2 weights.
/// Throws InsufficientSeasons for fewer than three seasons. Week-level fit
/// failures skip the affected entries and are listed in the report.
LosoResult nested_loso(std::vector<CvEntry> entries, const CvConfig& cfg);

/// Archive form of the above.
EvaluationReport nested_loso(const ForecastArchive& archive, const std::string& forecaster,
                             const std::string& target, const CvConfig& cfg);

struct SweepRow {
  int window_k = 0;
  Method method = Method::kNull;
  double mean_log_score = 0.0;
};

/// Runs `nested_loso` once per window half-width; four rows (nonparam,
/// beta, null, ensemble) per k.
std::vector<SweepRow> window_sweep(const ForecastArchive& archive, const std::string& forecaster,
                                   const std::string& target, const std::vector<int>& k_values,
                                   const CvConfig& cfg);

struct OrderResult {
  double original = 0.0;               ///< linear pool, no recalibration
  double recalibrate_then_pool = 0.0;  ///< C-E
  double pool_then_recalibrate = 0.0;  ///< E-C
  std::size_t n_scored = 0;
  /// Leave-one-season-out pool weights on the original components, by test season.
  std::vector<std::pair<int, EnsembleWeights>> pool_weights;
};

/// Compares recalibrating components before and after linear pooling. Pool
/// weights are fitted leave-one-season-out by the same EM as recalibration
/// ensembles; all three scores are held-out means over a common entry set.
/// Throws KeyMisalignment when the components do not cover the same keys.
OrderResult order_experiment(const ForecastArchive& archive,
                             const std::vector<std::string>& component_forecasters,
                             const std::string& target, const CvConfig& cfg);

}  // namespace recal
