#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "recal/cv.hpp"
#include "recal/forecast.hpp"
#include "recal/metrics.hpp"
#include "recal/pit.hpp"
#include "recal/recalibrate.hpp"

namespace recal::io {

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

inline constexpr std::string_view kArchiveHeader =
    "forecaster,target,location,season,week,bin_start,bin_end,mass";
inline constexpr std::string_view kObservationHeader = "target,location,season,week,value";
inline constexpr std::string_view kPitHeader = "forecaster,target,location,season,week,pit";

/// Reads forecast rows into `archive`. Rows of one key must be contiguous,
/// in bin order, with each bin_start equal to the previous bin_end.
/// Throws ParseError (with the source name and line number) on malformed
/// input, DuplicateKey, SupportMismatch, or the forecast validation errors.
void read_archive(std::istream& in, ForecastArchive& archive, std::string_view source = "<archive>");
void write_archive(std::ostream& out, const ForecastArchive& archive);

void read_observations(std::istream& in, ForecastArchive& archive,
                       std::string_view source = "<observations>");
void write_observations(std::ostream& out, const ForecastArchive& archive);

/// Loads a forecast CSV and, when given, its observation CSV.
ForecastArchive load_archive(const std::filesystem::path& forecasts,
                             const std::optional<std::filesystem::path>& observations);
void save_archive(const ForecastArchive& archive, const std::filesystem::path& forecasts,
                  const std::optional<std::filesystem::path>& observations);

void write_pits(std::ostream& out, const PitDataset& d);
PitDataset read_pits(std::istream& in, std::string_view source = "<pits>");

/// Provenance stored alongside a fitted map.
struct FitMetadata {
  std::size_t n_training = 0;
  std::optional<int> window_k;
  std::vector<int> excluded_seasons;
};

/// Contents of a map file: one correction map or a weighted ensemble.
struct MapDocument {
  Method method = Method::kNull;
  FitMetadata metadata;
  std::variant<CorrectionMap, EnsembleMap> map;

  double cdf(double x) const;
  BinnedForecast apply(const BinnedForecast& f) const;
};

MapDocument make_map_document(CorrectionMap map, FitMetadata metadata);
MapDocument make_map_document(EnsembleMap map, FitMetadata metadata);

void write_map(std::ostream& out, const MapDocument& doc);
/// Throws ParseError on malformed documents and DomainError on invalid maps.
MapDocument read_map(std::istream& in);

/// Applies `doc` to every forecast; observations are carried over.
ForecastArchive apply_to_archive(const MapDocument& doc, const ForecastArchive& archive);

/// Summary of one (forecaster, target) slice of an archive, scored as is.
struct ScoreSummary {
  std::string source;
  std::string forecaster;
  std::string target;
  std::size_t n = 0;
  double mean_log_score = 0.0;
  double pit_entropy = 0.0;
  EntropyBand uniform_band;
};

struct EvalOptions {
  std::optional<double> floor;
  std::size_t entropy_bins = 100;
  std::size_t band_samples = 2000;
  double band_coverage = 0.90;
  std::uint64_t seed = 0;
  PitOptions pit;
};

/// One summary per (forecaster, target) in key order. Throws
/// MissingObservation when any entry lacks an observation.
std::vector<ScoreSummary> evaluate_archive(const ForecastArchive& archive, std::string_view source,
                                           const EvalOptions& options);

void write_summaries_csv(std::ostream& out, const std::vector<ScoreSummary>& rows);
std::string summaries_json(const std::vector<ScoreSummary>& rows);

/// Long format: one row for the original forecasts and one per method.
void write_report_csv(std::ostream& out, const std::vector<EvaluationReport>& reports);
std::string reports_json(const std::vector<EvaluationReport>& reports);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::string order_json(const OrderResult& result);

}  // namespace recal::io
