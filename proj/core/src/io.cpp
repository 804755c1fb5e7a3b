#include "recal/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "recal/error.hpp"

namespace recal::io {

using nlohmann::json;

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace {

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string_view source, std::string_view header)
      : in_(in), source_(source) {
    std::string line;
    if (!next_line(line)) fail("empty file, expected header '" + std::string(header) + "'");
    if (line != header) fail("expected header '" + std::string(header) + "'");
  }

  /// Next data row split on commas; false at end of input.
  bool next(std::vector<std::string_view>& fields) {
    while (next_line(line_)) {
      if (line_.empty()) continue;
      fields.clear();
      std::string_view rest = line_;
      while (true) {
        const auto comma = rest.find(',');
        fields.push_back(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << source_ << ":" << line_no_ << ": " << what;
    throw Error(ErrorCode::kParseError, msg.str());
  }

  void expect_fields(const std::vector<std::string_view>& fields, std::size_t n) const {
    if (fields.size() != n) {
      fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields.size()));
    }
  }

  double number(std::string_view field, const char* name) const {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      fail(std::string("malformed ") + name + " '" + std::string(field) + "'");
    }
    return value;
  }

  int integer(std::string_view field, const char* name) const {
    int value = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      fail(std::string("malformed ") + name + " '" + std::string(field) + "'");
    }
    return value;
  }

  std::string identifier(std::string_view field, const char* name) const {
    if (field.empty()) fail(std::string("empty ") + name);
    return std::string(field);
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::istream& in_;
  std::string source_;
  std::string line_;
  std::size_t line_no_ = 0;
};

void check_identifier(const std::string& id) {
  if (id.empty() || id.find_first_of(",\"\r\n") != std::string::npos) {
    throw Error(ErrorCode::kParseError, "identifier '" + id + "' cannot be written as a CSV field");
  }
}

void write_key(std::ostream& out, const ForecastKey& key) {
  check_identifier(key.forecaster);
  check_identifier(key.target);
  check_identifier(key.location);
  out << key.forecaster << ',' << key.target << ',' << key.location << ',' << key.season << ','
      << key.week;
}

ForecastKey read_key(const CsvReader& csv, const std::vector<std::string_view>& f) {
  return {csv.identifier(f[0], "forecaster"), csv.identifier(f[1], "target"),
          csv.identifier(f[2], "location"), csv.integer(f[3], "season"),
          csv.integer(f[4], "week")};
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void read_archive(std::istream& in, ForecastArchive& archive, std::string_view source) {
  CsvReader csv(in, source, kArchiveHeader);
  std::vector<std::string_view> fields;
  std::optional<ForecastKey> current;
  std::vector<double> edges;
  std::vector<double> mass;
  std::size_t key_line = 0;
  std::map<std::string, SupportPtr> recent;

  auto flush = [&]() {
    if (!current) return;
    SupportPtr& support = recent[current->target];
    if (!support || !std::equal(edges.begin(), edges.end(), support->edges().begin(),
                                support->edges().end())) {
      support = std::make_shared<const BinSupport>(BinSupport(edges));
    }
    try {
      archive.insert(*current, BinnedForecast{support, mass});
    } catch (const Error& err) {
      std::ostringstream msg;
      msg << source << ":" << key_line << ": " << err.what();
      throw Error(err.code(), msg.str());
    }
    current.reset();
  };

  while (csv.next(fields)) {
    csv.expect_fields(fields, 8);
    ForecastKey key = read_key(csv, fields);
    const double start = csv.number(fields[5], "bin_start");
    const double end = csv.number(fields[6], "bin_end");
    const double m = csv.number(fields[7], "mass");
    if (!(end > start)) csv.fail("bin_end must exceed bin_start");
    if (current && *current == key) {
      if (start != edges.back()) csv.fail("bins of one key must be contiguous and ordered");
      edges.push_back(end);
      mass.push_back(m);
      continue;
    }
    flush();
    if (archive.find(key) != nullptr) csv.fail("rows for key " + to_string(key) + " are not contiguous");
    current = std::move(key);
    key_line = csv.line_no();
    edges = {start, end};
    mass = {m};
  }
  flush();
}

void write_archive(std::ostream& out, const ForecastArchive& archive) {
  out << kArchiveHeader << '\n';
  for (const auto& [key, forecast] : archive.forecasts()) {
    const auto edges = forecast.support->edges();
    for (std::size_t k = 0; k < forecast.mass.size(); ++k) {
      write_key(out, key);
      out << ',' << format_double(edges[k]) << ',' << format_double(edges[k + 1]) << ','
          << format_double(forecast.mass[k]) << '\n';
    }
  }
}

void read_observations(std::istream& in, ForecastArchive& archive, std::string_view source) {
  CsvReader csv(in, source, kObservationHeader);
  std::vector<std::string_view> fields;
  while (csv.next(fields)) {
    csv.expect_fields(fields, 5);
    ObservationKey key{csv.identifier(fields[0], "target"), csv.identifier(fields[1], "location"),
                       csv.integer(fields[2], "season"), csv.integer(fields[3], "week")};
    if (archive.observation(key)) csv.fail("duplicate observation");
    archive.set_observation(std::move(key), Observation{csv.number(fields[4], "value")});
  }
}

void write_observations(std::ostream& out, const ForecastArchive& archive) {
  out << kObservationHeader << '\n';
  for (const auto& [key, obs] : archive.observations()) {
    check_identifier(key.target);
    check_identifier(key.location);
    out << key.target << ',' << key.location << ',' << key.season << ',' << key.week << ','
        << format_double(obs.value) << '\n';
  }
}

ForecastArchive load_archive(const std::filesystem::path& forecasts,
                             const std::optional<std::filesystem::path>& observations) {
  ForecastArchive archive;
  auto in = open_in(forecasts);
  read_archive(in, archive, forecasts.string());
  if (observations) {
    auto obs_in = open_in(*observations);
    read_observations(obs_in, archive, observations->string());
  }
  return archive;
}

void save_archive(const ForecastArchive& archive, const std::filesystem::path& forecasts,
                  const std::optional<std::filesystem::path>& observations) {
  auto out = open_out(forecasts);
  write_archive(out, archive);
  if (observations) {
    auto obs_out = open_out(*observations);
    write_observations(obs_out, archive);
  }
}

void write_pits(std::ostream& out, const PitDataset& d) {
  out << kPitHeader << '\n';
  for (const auto& r : d.records) {
    write_key(out, r.key);
    out << ',' << format_double(r.pit) << '\n';
  }
}

PitDataset read_pits(std::istream& in, std::string_view source) {
  CsvReader csv(in, source, kPitHeader);
  std::vector<std::string_view> fields;
  PitDataset d;
  while (csv.next(fields)) {
    csv.expect_fields(fields, 6);
    ForecastKey key = read_key(csv, fields);
    const double pit = csv.number(fields[5], "pit");
    if (!(pit >= 0.0 && pit <= 1.0)) csv.fail("PIT outside [0, 1]");
    d.records.push_back({std::move(key), pit});
  }
  return d;
}

// Map files.

double MapDocument::cdf(double x) const {
  return std::visit([x](const auto& m) { return m.cdf(x); }, map);
}

BinnedForecast MapDocument::apply(const BinnedForecast& f) const {
  return std::visit([&f](const auto& m) { return apply_map(m, f); }, map);
}

MapDocument make_map_document(CorrectionMap map, FitMetadata metadata) {
  MapDocument doc;
  doc.method = map.method();
  doc.metadata = std::move(metadata);
  doc.map = std::move(map);
  return doc;
}

MapDocument make_map_document(EnsembleMap map, FitMetadata metadata) {
  map.weights.validate();
  if (map.weights.w.size() != map.components.size()) {
    throw Error(ErrorCode::kDomainError, "ensemble weight count differs from component count");
  }
  MapDocument doc;
  doc.method = Method::kEnsemble;
  doc.metadata = std::move(metadata);
  doc.map = std::move(map);
  return doc;
}

namespace {

json component_json(const CorrectionMap& m) {
  json j;
  j["method"] = std::string(to_string(m.method()));
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MonotoneCdfMap>) {
          j["knots_x"] = std::vector<double>(v.knots_x().begin(), v.knots_x().end());
          j["knots_y"] = std::vector<double>(v.knots_y().begin(), v.knots_y().end());
          j["slopes"] = std::vector<double>(v.slopes().begin(), v.slopes().end());
          j["uniform_blend"] = v.uniform_blend();
        } else if constexpr (std::is_same_v<T, BetaParams>) {
          j["alpha"] = v.alpha;
          j["beta"] = v.beta;
          j["delta"] = v.delta;
        }
      },
      m.variant());
  return j;
}

CorrectionMap component_from_json(const json& j) {
  const Method method = parse_method(j.at("method").get<std::string>());
  switch (method) {
    case Method::kNonparametric:
      return CorrectionMap(MonotoneCdfMap(
          j.at("knots_x").get<std::vector<double>>(), j.at("knots_y").get<std::vector<double>>(),
          j.at("slopes").get<std::vector<double>>(), j.at("uniform_blend").get<double>()));
    case Method::kBeta: {
      BetaParams p{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                   j.at("delta").get<double>()};
      if (!(p.alpha > 0.0 && p.beta > 0.0 && p.alpha <= kBetaParamCap &&
            p.beta <= kBetaParamCap && p.delta > 0.0 && p.delta < 0.5)) {
        throw Error(ErrorCode::kDomainError, "beta map parameters out of range");
      }
      return CorrectionMap(p);
    }
    case Method::kNull:
      return CorrectionMap(NullMap{});
    case Method::kEnsemble:
      break;
  }
  throw Error(ErrorCode::kParseError, "ensembles cannot be nested");
}

}  // namespace

void write_map(std::ostream& out, const MapDocument& doc) {
  json j;
  j["format"] = "recal-map";
  j["version"] = 1;
  j["method"] = std::string(to_string(doc.method));
  json meta;
  meta["n_training"] = doc.metadata.n_training;
  meta["window_k"] = doc.metadata.window_k ? json(*doc.metadata.window_k) : json(nullptr);
  meta["excluded_seasons"] = doc.metadata.excluded_seasons;
  j["metadata"] = meta;
  if (const auto* ens = std::get_if<EnsembleMap>(&doc.map)) {
    json components = json::array();
    for (const auto& c : ens->components) components.push_back(component_json(c));
    j["components"] = components;
    j["weights"] = ens->weights.w;
  } else {
    j["map"] = component_json(std::get<CorrectionMap>(doc.map));
  }
  out << j.dump(2) << '\n';
}

MapDocument read_map(std::istream& in) {
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "recal-map" || j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kParseError, "not a version-1 recal map file");
    }
    FitMetadata meta;
    const json& m = j.at("metadata");
    meta.n_training = m.at("n_training").get<std::size_t>();
    if (m.contains("window_k") && !m["window_k"].is_null()) meta.window_k = m["window_k"].get<int>();
    if (m.contains("excluded_seasons")) {
      meta.excluded_seasons = m["excluded_seasons"].get<std::vector<int>>();
    }

    const Method method = parse_method(j.at("method").get<std::string>());
    if (method == Method::kEnsemble) {
      EnsembleMap ens;
      for (const auto& c : j.at("components")) ens.components.push_back(component_from_json(c));
      ens.weights.w = j.at("weights").get<std::vector<double>>();
      return make_map_document(std::move(ens), std::move(meta));
    }
    MapDocument doc = make_map_document(component_from_json(j.at("map")), std::move(meta));
    if (doc.method != method) {
      throw Error(ErrorCode::kParseError, "map method tag disagrees with its payload");
    }
    return doc;
  } catch (const json::exception& err) {
    throw Error(ErrorCode::kParseError, std::string("map file: ") + err.what());
  }
}

ForecastArchive apply_to_archive(const MapDocument& doc, const ForecastArchive& archive) {
  ForecastArchive out;
  for (const auto& [key, forecast] : archive.forecasts()) out.insert(key, doc.apply(forecast));
  for (const auto& [key, obs] : archive.observations()) out.set_observation(key, obs);
  return out;
}

// Reports.

std::vector<ScoreSummary> evaluate_archive(const ForecastArchive& archive, std::string_view source,
                                           const EvalOptions& options) {
  std::map<std::pair<std::string, std::string>, std::vector<ForecastKey>> slices;
  for (const auto& [key, _] : archive.forecasts()) slices[{key.forecaster, key.target}].push_back(key);

  std::vector<ScoreSummary> rows;
  for (const auto& [slice, keys] : slices) {
    ScoreSummary row;
    row.source = std::string(source);
    row.forecaster = slice.first;
    row.target = slice.second;
    row.n = keys.size();
    row.mean_log_score = mean_log_score(archive, keys, options.floor);
    const PitDataset pits = build_pit_dataset(
        archive,
        [&slice](const ForecastKey& k) {
          return k.forecaster == slice.first && k.target == slice.second;
        },
        options.pit);
    row.pit_entropy = pit_entropy(pits, options.entropy_bins).value;
    row.uniform_band = uniform_entropy_band(row.n, options.entropy_bins, options.band_coverage,
                                            options.band_samples, options.seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summaries_csv(std::ostream& out, const std::vector<ScoreSummary>& rows) {
  out << "source,forecaster,target,n,mean_log_score,pit_entropy,band_lo,band_hi\n";
  for (const auto& r : rows) {
    out << r.source << ',' << r.forecaster << ',' << r.target << ',' << r.n << ','
        << format_double(r.mean_log_score) << ',' << format_double(r.pit_entropy) << ','
        << format_double(r.uniform_band.lo) << ',' << format_double(r.uniform_band.hi) << '\n';
  }
}

std::string summaries_json(const std::vector<ScoreSummary>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"source", r.source},
                   {"forecaster", r.forecaster},
                   {"target", r.target},
                   {"n", r.n},
                   {"mean_log_score", r.mean_log_score},
                   {"pit_entropy", r.pit_entropy},
                   {"uniform_band", {r.uniform_band.lo, r.uniform_band.hi}}});
  }
  return arr.dump(2);
}

void write_report_csv(std::ostream& out, const std::vector<EvaluationReport>& reports) {
  out << "forecaster,target,window_k,method,n_scored,mean_log_score,pit_entropy\n";
  for (const auto& r : reports) {
    const auto prefix = r.forecaster + ',' + r.target + ',' + std::to_string(r.window_k) + ',';
    out << prefix << "original," << r.n_scored << ',' << format_double(r.mean_log_score_before)
        << ',' << format_double(r.pit_entropy_before) << '\n';
    for (const auto& s : r.after) {
      out << prefix << to_string(s.method) << ',' << r.n_scored << ','
          << format_double(s.mean_log_score) << ',' << format_double(s.pit_entropy) << '\n';
    }
  }
}

std::string reports_json(const std::vector<EvaluationReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json after = json::object();
    for (const auto& s : r.after) {
      after[std::string(to_string(s.method))] = {{"mean_log_score", s.mean_log_score},
                                                 {"pit_entropy", s.pit_entropy}};
    }
    json folds = json::array();
    for (const auto& f : r.folds) {
      json inner = json::array();
      for (const auto& st : f.inner) {
        inner.push_back({{"held_season", st.held_season},
                         {"training_seasons", st.training_seasons},
                         {"n_training", st.n_training},
                         {"n_recalibrated", st.n_recalibrated}});
      }
      folds.push_back({{"test_season", f.test_season},
                       {"skipped", f.skipped},
                       {"reason", f.reason},
                       {"weights", f.weights.w},
                       {"weight_seasons", f.weight_seasons},
                       {"inner", inner},
                       {"outer",
                        {{"training_seasons", f.outer.training_seasons},
                         {"n_training", f.outer.n_training},
                         {"n_recalibrated", f.outer.n_recalibrated}}},
                       {"n_scored", f.n_scored}});
    }
    json failures = json::array();
    for (const auto& f : r.failures) {
      failures.push_back({{"test_season", f.test_season},
                          {"held_season", f.held_season},
                          {"week", f.week},
                          {"reason", f.reason}});
    }
    json flagged = json::array();
    for (const auto& f : r.flagged_weeks) {
      flagged.push_back({{"test_season", f.test_season},
                         {"week", f.week},
                         {"central_fraction", f.central_fraction}});
    }
    arr.push_back({{"forecaster", r.forecaster},
                   {"target", r.target},
                   {"window_k", r.window_k},
                   {"n_entries", r.n_entries},
                   {"n_scored", r.n_scored},
                   {"before",
                    {{"mean_log_score", r.mean_log_score_before},
                     {"pit_entropy", r.pit_entropy_before}}},
                   {"after", after},
                   {"uniform_band", {r.uniform_band.lo, r.uniform_band.hi}},
                   {"folds", folds},
                   {"failures", failures},
                   {"flagged_weeks", flagged}});
  }
  return arr.dump(2);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "window_k,method,mean_log_score\n";
  for (const auto& r : rows) {
    out << r.window_k << ',' << to_string(r.method) << ',' << format_double(r.mean_log_score)
        << '\n';
  }
}

std::string order_json(const OrderResult& result) {
  json weights = json::array();
  for (const auto& [season, w] : result.pool_weights) {
    weights.push_back({{"test_season", season}, {"weights", w.w}});
  }
  return json{{"original", result.original},
              {"recalibrate_then_pool", result.recalibrate_then_pool},
              {"pool_then_recalibrate", result.pool_then_recalibrate},
              {"n_scored", result.n_scored},
              {"pool_weights", weights}}
      .dump(2);
}

}  // namespace recal::io
