#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recal/cv.hpp"
#include "recal/error.hpp"
#include "recal/io.hpp"
#include "recal/pit.hpp"
#include "recal/recalibrate.hpp"
#include "recal/synthetic.hpp"

namespace {

using recal::Error;
using recal::ErrorCode;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  other failure\n"
    "  2  parse error (file and line are printed) or invalid forecast\n"
    "  3  missing observations or empty data\n"
    "  4  insufficient data or seasons for a fit\n"
    "  5  support mismatch or misaligned keys\n"
    "The RECAL_SEED environment variable sets the default for every --seed flag.";

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RECAL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, std::string("RECAL_SEED is not an integer: ") + env);
    }
  }
  return 0;
}

// Writes to `path`, or stdout for an empty path or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  fn(out);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read '" + path + "'");
  return in;
}

recal::PitOptions pit_options(const std::string& mode, std::uint64_t seed) {
  if (mode == "midbin" || mode == "mid-bin") return {recal::PitMode::kMidBin, seed};
  if (mode == "randomized") return {recal::PitMode::kRandomized, seed};
  throw Error(ErrorCode::kParseError, "unknown PIT mode '" + mode + "'");
}

void warn_clamped(const std::vector<recal::ForecastKey>& keys) {
  for (const auto& key : keys) {
    std::cerr << "warning: observation outside the support, clamped: " << recal::to_string(key)
              << '\n';
  }
}

void warn_failures(const recal::EvaluationReport& r) {
  for (const auto& f : r.failures) {
    std::cerr << "warning: " << r.forecaster << '/' << r.target << " test season "
              << f.test_season << " week " << f.week << ": fit skipped (" << f.reason << ")\n";
  }
  for (const auto& w : r.flagged_weeks) {
    std::cerr << "note: " << r.forecaster << '/' << r.target << " test season " << w.test_season
              << " week " << w.week << ": " << w.central_fraction
              << " of training PITs in the central bin\n";
  }
}

struct ArchiveArgs {
  std::string forecasts;
  std::string observations;

  void add(CLI::App* cmd, bool observations_required) {
    cmd->add_option("-f,--forecasts", forecasts, "forecast archive CSV")->required();
    auto* opt = cmd->add_option("-o,--observations", observations, "observations CSV");
    if (observations_required) opt->required();
  }

  recal::ForecastArchive load() const {
    std::optional<std::filesystem::path> obs;
    if (!observations.empty()) obs = observations;
    return recal::io::load_archive(forecasts, obs);
  }
};

struct FitArgs {
  std::size_t n_knots = 0;
  double blend = recal::kDefaultUniformBlend;
  double delta = recal::kBetaClamp;

  void add(CLI::App* cmd) {
    cmd->add_option("--knots", n_knots, "spline knots; 0 picks clamp(ceil(sqrt(N)), 5, 25)");
    cmd->add_option("--blend", blend, "uniform blend lambda for the spline map")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--delta", delta, "beta clamp delta")->check(CLI::Range(0.0, 0.5));
  }
};

// ---------------------------------------------------------------- pit

struct PitCommand {
  ArchiveArgs archive;
  std::string forecaster;
  std::string target;
  std::string mode = "midbin";
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("pit", "compute PIT values for an archive");
    archive.add(cmd, true);
    cmd->add_option("--forecaster", forecaster, "only this forecaster");
    cmd->add_option("--target", target, "only this target");
    cmd->add_option("--mode", mode, "midbin or randomized");
    seed = default_seed();
    cmd->add_option("--seed", seed, "seed for randomized PITs");
    cmd->add_option("--out", out, "PIT CSV (default stdout)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto a = archive.load();
    const auto d = recal::build_pit_dataset(
        a,
        [&](const recal::ForecastKey& k) {
          return (forecaster.empty() || k.forecaster == forecaster) &&
                 (target.empty() || k.target == target);
        },
        pit_options(mode, seed));
    warn_clamped(d.clamped);
    with_output(out, [&](std::ostream& os) { recal::io::write_pits(os, d); });
  }
};

// ---------------------------------------------------------------- fit

struct FitCommand {
  std::string pits;
  std::string method = "nonparam";
  FitArgs fit;
  std::string target;
  std::optional<int> week;
  int window_k = 3;
  std::vector<int> exclude;
  ArchiveArgs scoring;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "fit",
        "fit a correction map to PIT values; 'ensemble' also scores the three fitted "
        "components on --forecasts/--observations to choose the weights");
    cmd->add_option("-p,--pits", pits, "PIT CSV")->required();
    cmd->add_option("-m,--method", method, "nonparam, beta, null or ensemble");
    fit.add(cmd);
    cmd->add_option("--target", target, "only PITs of this target");
    cmd->add_option("--week", week, "train on weeks within --window-k of this week");
    cmd->add_option("--window-k", window_k, "window half-width used with --week")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--exclude-seasons", exclude, "seasons left out of training")->delimiter(',');
    cmd->add_option("-f,--forecasts", scoring.forecasts, "archive scored to fit ensemble weights");
    cmd->add_option("-o,--observations", scoring.observations, "observations for --forecasts");
    cmd->add_option("--out", out, "map file (default stdout)");
    cmd->callback([this] { run(); });
  }

  recal::PitDataset training() const {
    auto in = open_input(pits);
    auto all = recal::io::read_pits(in, pits);
    const std::set<int> excluded(exclude.begin(), exclude.end());
    recal::KeyPredicate keep;
    if (week) {
      if (target.empty()) throw Error(ErrorCode::kParseError, "--week needs --target");
      keep = recal::window_select(target, *week, window_k, excluded);
    } else {
      keep = [&](const recal::ForecastKey& k) {
        return (target.empty() || k.target == target) && !excluded.contains(k.season);
      };
    }
    recal::PitDataset d;
    for (auto& r : all.records) {
      if (keep(r.key)) d.records.push_back(std::move(r));
    }
    return d;
  }

  void run() const {
    const auto m = recal::parse_method(method);
    const auto d = training();
    recal::io::FitMetadata meta{d.size(), std::nullopt, exclude};
    if (week) meta.window_k = window_k;

    recal::CvConfig cfg;
    cfg.n_knots = fit.n_knots;
    cfg.uniform_blend = fit.blend;
    cfg.beta_delta = fit.delta;

    recal::io::MapDocument doc;
    const auto values = d.values();
    switch (m) {
      case recal::Method::kNull:
        doc = recal::io::make_map_document(recal::CorrectionMap{}, meta);
        break;
      case recal::Method::kNonparametric:
      case recal::Method::kBeta:
        doc = recal::io::make_map_document(
            recal::fit_components(values, cfg)[static_cast<std::size_t>(m)], meta);
        break;
      case recal::Method::kEnsemble: {
        if (scoring.forecasts.empty() || scoring.observations.empty()) {
          throw Error(ErrorCode::kParseError,
                      "--method ensemble needs --forecasts and --observations to fit weights");
        }
        const auto components = recal::fit_components(values, cfg);
        const auto a = scoring.load();
        std::vector<std::vector<double>> q;
        for (const auto& [key, f] : a.forecasts()) {
          if (!target.empty() && key.target != target) continue;
          const auto y = a.observation(key);
          if (!y) {
            throw Error(ErrorCode::kMissingObservation, "no observation for " + recal::to_string(key));
          }
          const auto cell = recal::observed_cell(f, *y);
          auto& row = q.emplace_back();
          for (const auto& c : components) row.push_back(recal::apply_map(c, cell).mass);
        }
        auto weights = recal::fit_ensemble_weights(q).weights;
        doc = recal::io::make_map_document(
            recal::EnsembleMap{{components.begin(), components.end()}, std::move(weights)}, meta);
        break;
      }
    }
    with_output(out, [&](std::ostream& os) { recal::io::write_map(os, doc); });
  }
};

// ---------------------------------------------------------------- apply

struct ApplyCommand {
  ArchiveArgs archive;
  std::string map;
  std::string out;
  std::string out_observations;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("apply", "recalibrate every forecast in an archive");
    archive.add(cmd, false);
    cmd->add_option("--map", map, "map file")->required();
    cmd->add_option("--out", out, "recalibrated archive CSV (default stdout)");
    cmd->add_option("--out-observations", out_observations, "copy of the observations");
    cmd->callback([this] { run(); });
  }

  void run() const {
    auto in = open_input(map);
    const auto doc = recal::io::read_map(in);
    const auto a = archive.load();
    const auto recalibrated = recal::io::apply_to_archive(doc, a);
    with_output(out, [&](std::ostream& os) { recal::io::write_archive(os, recalibrated); });
    if (!out_observations.empty()) {
      with_output(out_observations,
                  [&](std::ostream& os) { recal::io::write_observations(os, recalibrated); });
    }
  }
};

// ---------------------------------------------------------------- eval

struct EvalCommand {
  std::vector<std::string> forecasts;
  std::string observations;
  std::optional<double> floor;
  std::size_t entropy_bins = 100;
  std::size_t band_samples = 2000;
  double coverage = 0.90;
  std::string mode = "midbin";
  std::uint64_t seed = 0;
  std::string out;
  std::string json;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "eval", "mean log score, PIT entropy and uniform-entropy band per forecaster and target");
    cmd->add_option("-f,--forecasts", forecasts, "one or more archive CSVs")->required();
    cmd->add_option("-o,--observations", observations, "observations CSV")->required();
    cmd->add_option("--floor", floor, "lower bound applied to each log score");
    cmd->add_option("--entropy-bins", entropy_bins, "histogram bins for the PIT entropy")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--band-samples", band_samples, "Monte Carlo draws for the band")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--coverage", coverage, "band coverage")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--mode", mode, "PIT mode: midbin or randomized");
    seed = default_seed();
    cmd->add_option("--seed", seed, "seed for the band and randomized PITs");
    cmd->add_option("--out", out, "report CSV (default stdout)");
    cmd->add_option("--json", json, "JSON summary");
    cmd->callback([this] { run(); });
  }

  void run() const {
    recal::io::EvalOptions options;
    options.floor = floor;
    options.entropy_bins = entropy_bins;
    options.band_samples = band_samples;
    options.band_coverage = coverage;
    options.seed = seed;
    options.pit = pit_options(mode, seed);

    std::vector<recal::io::ScoreSummary> rows;
    for (const auto& path : forecasts) {
      const auto a = recal::io::load_archive(path, std::filesystem::path(observations));
      auto part = recal::io::evaluate_archive(a, path, options);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    with_output(out, [&](std::ostream& os) { recal::io::write_summaries_csv(os, rows); });
    if (!json.empty()) {
      with_output(json, [&](std::ostream& os) { os << recal::io::summaries_json(rows) << '\n'; });
    }
  }
};

// ---------------------------------------------------------------- cv

struct CvCommand {
  ArchiveArgs archive;
  std::string forecaster;
  std::string target;
  int window_k = 3;
  std::vector<int> sweep;
  std::vector<std::string> order;
  FitArgs fit;
  std::optional<double> floor;
  std::size_t entropy_bins = 100;
  std::string mode = "midbin";
  std::uint64_t seed = 0;
  std::string out;
  std::string json;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "cv", "nested leave-one-season-out evaluation, window sweep, or ordering experiment");
    archive.add(cmd, true);
    cmd->add_option("--forecaster", forecaster, "forecaster to evaluate (default: all)");
    cmd->add_option("--target", target, "target to evaluate (default: all)");
    cmd->add_option("-k,--window-k", window_k, "training window half-width in weeks")
        ->check(CLI::NonNegativeNumber);
    auto* sweep_opt =
        cmd->add_option("--sweep", sweep, "comma-separated window half-widths")->delimiter(',');
    cmd->add_option("--order", order, "component forecasters for the C-E/E-C experiment")
        ->delimiter(',')
        ->excludes(sweep_opt);
    fit.add(cmd);
    cmd->add_option("--floor", floor, "lower bound applied to each log score");
    cmd->add_option("--entropy-bins", entropy_bins, "histogram bins for the PIT entropy")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mode", mode, "PIT mode: midbin or randomized");
    seed = default_seed();
    cmd->add_option("--seed", seed, "seed for the band and randomized PITs");
    cmd->add_option("--out", out, "CSV output (default stdout)");
    cmd->add_option("--json", json, "JSON output (report or ordering result)");
    cmd->callback([this] { run(); });
  }

  recal::CvConfig config() const {
    recal::CvConfig cfg;
    cfg.window_k = window_k;
    cfg.pit = pit_options(mode, seed);
    cfg.n_knots = fit.n_knots;
    cfg.uniform_blend = fit.blend;
    cfg.beta_delta = fit.delta;
    cfg.score_floor = floor;
    cfg.entropy_bins = entropy_bins;
    cfg.seed = seed;
    return cfg;
  }

  // Every (forecaster, target) pair matching the filters, in archive order.
  std::vector<std::pair<std::string, std::string>> slices(const recal::ForecastArchive& a) const {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [key, f] : a.forecasts()) {
      if ((forecaster.empty() || key.forecaster == forecaster) &&
          (target.empty() || key.target == target)) {
        seen.emplace(key.forecaster, key.target);
      }
    }
    if (seen.empty()) throw Error(ErrorCode::kEmptyDataset, "no forecasts match the filters");
    return {seen.begin(), seen.end()};
  }

  void run() const {
    const auto a = archive.load();
    const auto cfg = config();

    if (!order.empty()) {
      std::string t = target;
      if (t.empty()) {
        std::set<std::string> targets;
        for (const auto& [key, f] : a.forecasts()) targets.insert(key.target);
        if (targets.size() != 1) {
          throw Error(ErrorCode::kParseError, "--order needs --target when the archive has several");
        }
        t = *targets.begin();
      }
      const auto result = recal::order_experiment(a, order, t, cfg);
      with_output(out, [&](std::ostream& os) {
        os << "ordering,mean_log_score\n"
           << "original," << recal::io::format_double(result.original) << '\n'
           << "C-E," << recal::io::format_double(result.recalibrate_then_pool) << '\n'
           << "E-C," << recal::io::format_double(result.pool_then_recalibrate) << '\n';
      });
      if (!json.empty()) {
        with_output(json, [&](std::ostream& os) { os << recal::io::order_json(result) << '\n'; });
      }
      return;
    }

    if (!sweep.empty()) {
      std::vector<recal::SweepRow> rows;
      for (const auto& [fc, t] : slices(a)) {
        auto part = recal::window_sweep(a, fc, t, sweep, cfg);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      with_output(out, [&](std::ostream& os) { recal::io::write_sweep_csv(os, rows); });
      return;
    }

    std::vector<recal::EvaluationReport> reports;
    for (const auto& [fc, t] : slices(a)) {
      reports.push_back(recal::nested_loso(a, fc, t, cfg));
      warn_failures(reports.back());
    }
    with_output(out, [&](std::ostream& os) { recal::io::write_report_csv(os, reports); });
    if (!json.empty()) {
      with_output(json, [&](std::ostream& os) { os << recal::io::reports_json(reports) << '\n'; });
    }
  }
};

// ---------------------------------------------------------------- synth

struct SynthCommand {
  recal::GaussianScenario scenario;
  std::string kind = "ideal";
  std::vector<double> split_signal;
  double noise_variance = 0.25;
  std::string out;
  std::string out_observations;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "write a synthetic Gaussian forecast archive");
    auto& s = scenario;
    cmd->add_option("--kind", kind,
                    "ideal, underconfident, overconfident, biased or climatological");
    cmd->add_option("--scale", s.scale, "forecast variance multiplier (under/overconfident)");
    cmd->add_option("--shift", s.shift, "forecast mean shift (biased)");
    cmd->add_option("--hyper-mean", s.hyper_mean, "mean of the per-entry truth means");
    cmd->add_option("--hyper-variance", s.hyper_variance, "variance of the per-entry truth means");
    cmd->add_option("--truth-variance", s.truth_variance, "variance of y around its mean");
    cmd->add_option("--drift", s.drift_per_week, "forecast mean drift per week");
    cmd->add_option("-n,--n-per-season", s.n_per_season, "entries per season");
    cmd->add_option("--seasons", s.n_seasons, "number of seasons");
    cmd->add_option("--weeks", s.n_weeks, "weeks per season");
    cmd->add_option("--bin-width", s.bin_width, "bin width");
    cmd->add_option("--lo", s.support_lo, "support lower edge");
    cmd->add_option("--hi", s.support_hi, "support upper edge");
    cmd->add_option("--forecaster", s.forecaster, "forecaster name (default: the kind)");
    cmd->add_option("--target", s.target, "target name");
    cmd->add_option("--split-signal", split_signal,
                    "signal variances; writes one calibrated forecaster C1, C2, ... per part")
        ->delimiter(',');
    cmd->add_option("--noise-variance", noise_variance, "unexplained variance for --split-signal");
    s.seed = default_seed();
    cmd->add_option("--seed", s.seed, "random seed");
    cmd->add_option("--out", out, "archive CSV")->required();
    cmd->add_option("--out-observations", out_observations, "observations CSV")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    recal::ForecastArchive a;
    if (!split_signal.empty()) {
      recal::SplitSignalScenario s;
      s.signal_variances = split_signal;
      s.noise_variance = noise_variance;
      s.n_per_season = scenario.n_per_season;
      s.n_seasons = scenario.n_seasons;
      s.n_weeks = scenario.n_weeks;
      s.bin_width = scenario.bin_width;
      s.support_lo = scenario.support_lo;
      s.support_hi = scenario.support_hi;
      s.seed = scenario.seed;
      s.target = scenario.target;
      a = recal::generate(s);
    } else {
      auto s = scenario;
      s.kind = recal::parse_forecaster_kind(kind);
      a = recal::generate(s);
    }
    recal::io::save_archive(a, out, std::filesystem::path(out_observations));
  }
};

}  // namespace

int main(int argc, char** argv) {
  try {
    CLI::App app{"Recalibration of binned probabilistic forecasts", "recal"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    PitCommand pit;
    FitCommand fit;
    ApplyCommand apply;
    EvalCommand eval;
    CvCommand cv;
    SynthCommand synth;
    pit.add(app);
    fit.add(app);
    apply.add(app);
    eval.add(app);
    cv.add(app);
    synth.add(app);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return recal::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
