#include "recal/cv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "recal/error.hpp"
#include "recal/spline_map.hpp"

namespace recal {

void CvConfig::validate() const {
  if (window_k < 0) throw Error(ErrorCode::kDomainError, "window_k must be nonnegative");
  if (n_knots == 1) throw Error(ErrorCode::kDomainError, "n_knots must be 0 (auto) or >= 2");
  if (!(uniform_blend >= 0.0 && uniform_blend < 1.0)) {
    throw Error(ErrorCode::kDomainError, "uniform blend must lie in [0, 1)");
  }
  if (!(beta_delta > 0.0 && beta_delta < 0.5)) {
    throw Error(ErrorCode::kDomainError, "beta delta must lie in (0, 0.5)");
  }
  if (entropy_bins == 0 || band_samples == 0) {
    throw Error(ErrorCode::kDomainError, "entropy bins and band samples must be positive");
  }
}

std::array<CorrectionMap, kEnsembleComponents> fit_components(std::span<const double> pits,
                                                              const CvConfig& cfg) {
  const std::size_t knots = cfg.n_knots != 0 ? cfg.n_knots : default_knot_count(pits.size());
  return {CorrectionMap(fit_nonparametric(pits, knots, cfg.uniform_blend)),
          CorrectionMap(fit_beta_mle(pits, cfg.beta_delta).params), CorrectionMap(NullMap{})};
}

std::vector<CvEntry> collect_entries(const ForecastArchive& archive, const std::string& forecaster,
                                     const std::string& target, const PitOptions& pit) {
  std::vector<CvEntry> out;
  std::vector<ForecastKey> missing;
  std::mt19937_64 rng(pit.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& [key, forecast] : archive.forecasts()) {
    if (key.forecaster != forecaster || key.target != target) continue;
    const auto obs = archive.observation(key);
    if (!obs) {
      missing.push_back(key);
      continue;
    }
    const double u = pit.mode == PitMode::kMidBin ? 0.5 : unif(rng);
    out.push_back({key, observed_cell(forecast, *obs), u});
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " entries lack observations:";
    for (const auto& k : missing) msg << "\n  " << to_string(k);
    throw Error(ErrorCode::kMissingObservation, msg.str());
  }
  return out;
}

const MethodSummary& EvaluationReport::summary(Method m) const {
  for (const auto& s : after) {
    if (s.method == m) return s;
  }
  throw Error(ErrorCode::kDomainError, "report has no summary for " + std::string(to_string(m)));
}

namespace {

using Components = std::array<CorrectionMap, kEnsembleComponents>;

struct ComponentFit {
  std::optional<Components> maps;
  std::string failure;
  std::size_t n_training = 0;
  std::set<int> seasons;
  std::size_t central = 0;
};

ObservedCell mix_cells(const EnsembleWeights& w, const std::array<ObservedCell, 4>& cells) {
  ObservedCell out{0.0, 0.0, cells[0].clamped, cells[0].top};
  for (std::size_t j = 0; j < kEnsembleComponents; ++j) {
    out.below += w.w[j] * cells[j].below;
    out.mass += w.w[j] * cells[j].mass;
  }
  return out;
}

class LosoRunner {
 public:
  LosoRunner(std::vector<CvEntry> entries, const CvConfig& cfg)
      : entries_(std::move(entries)), cfg_(cfg) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& key = entries_[i].key;
      groups_[{key.season, key.week}].push_back(i);
      seasons_.insert(key.season);
    }
  }

  LosoResult run() {
    if (seasons_.size() < 3) {
      throw Error(ErrorCode::kInsufficientSeasons,
                  "nested leave-one-season-out needs at least 3 seasons, got " +
                      std::to_string(seasons_.size()));
    }
    LosoResult result;
    for (int s : seasons_) result.report.folds.push_back(run_fold(s, result));
    std::sort(result.held_out.begin(), result.held_out.end(),
              [](const HeldOutEntry& a, const HeldOutEntry& b) { return a.key < b.key; });
    summarize(result);
    return result;
  }

 private:
  // Fits for a week window with `excluded` seasons left out. Inner stages
  // for (s, r) and (r, s) train on the same data, so fits are cached on the
  // unordered pair.
  const ComponentFit& fit_for(int week, const std::set<int>& excluded) {
    std::vector<int> tag(excluded.begin(), excluded.end());
    tag.push_back(week);
    auto [it, inserted] = cache_.try_emplace(std::move(tag));
    if (!inserted) return it->second;

    ComponentFit& fit = it->second;
    const std::string& target = entries_.front().key.target;
    const KeyPredicate accept = window_select(target, week, cfg_.window_k, excluded);
    const std::size_t centre = entropy_bin(0.5, cfg_.entropy_bins);
    std::vector<double> pits;
    for (const auto& [group, indices] : groups_) {
      if (!accept(entries_[indices.front()].key)) continue;
      for (std::size_t idx : indices) {
        const CvEntry& e = entries_[idx];
        if (excluded.contains(e.key.season)) {
          throw Error(ErrorCode::kLeakage, "held-out season entered a training set");
        }
        pits.push_back(e.pit());
        if (entropy_bin(e.pit(), cfg_.entropy_bins) == centre) ++fit.central;
      }
      fit.seasons.insert(group.first);
    }
    fit.n_training = pits.size();
    try {
      fit.maps = fit_components(pits, cfg_);
    } catch (const Error& err) {
      switch (err.code()) {
        case ErrorCode::kInsufficientData:
        case ErrorCode::kDegenerateData:
        case ErrorCode::kParameterOutOfRange:
          fit.failure = err.what();
          break;
        default:
          throw;
      }
    }
    return fit;
  }

  static void record_stage(StageLog& log, const ComponentFit& fit) {
    log.training_seasons.insert(fit.seasons.begin(), fit.seasons.end());
    log.n_training += fit.n_training;
  }

  std::array<ObservedCell, 4> recalibrate(const Components& maps, const ObservedCell& cell) {
    std::array<ObservedCell, 4> out;
    for (std::size_t j = 0; j < kEnsembleComponents; ++j) out[j] = apply_map(maps[j], cell);
    out[3] = cell;
    return out;
  }

  FoldLog run_fold(int s, LosoResult& result) {
    FoldLog log;
    log.test_season = s;

    // Steps 1-2: recalibrate every other season without s, fit weights.
    std::vector<std::vector<double>> q;
    for (int r : seasons_) {
      if (r == s) continue;
      StageLog stage;
      stage.held_season = r;
      for (const auto& [group, indices] : groups_) {
        if (group.first != r) continue;
        const ComponentFit& fit = fit_for(group.second, {r, s});
        record_stage(stage, fit);
        if (!fit.maps) {
          result.report.failures.push_back({s, r, group.second, fit.failure});
          continue;
        }
        for (std::size_t idx : indices) {
          const auto cells = recalibrate(*fit.maps, entries_[idx].cell);
          q.push_back({cells[0].mass, cells[1].mass, cells[2].mass});
          ++stage.n_recalibrated;
        }
        log.weight_seasons.insert(r);
      }
      if (stage.training_seasons.contains(s) || stage.training_seasons.contains(r)) {
        throw Error(ErrorCode::kLeakage, "inner training set contains a held-out season");
      }
      log.inner.push_back(std::move(stage));
    }
    if (q.empty()) {
      log.skipped = true;
      log.reason = "no season other than the test season could be recalibrated";
      return log;
    }
    if (log.weight_seasons.contains(s)) {
      throw Error(ErrorCode::kLeakage, "ensemble weights saw the test season");
    }
    log.weights = fit_ensemble_weights(q).weights;

    // Steps 3-4: recalibrate season s on all other seasons, mix.
    log.outer.held_season = s;
    for (const auto& [group, indices] : groups_) {
      if (group.first != s) continue;
      const ComponentFit& fit = fit_for(group.second, {s});
      record_stage(log.outer, fit);
      if (fit.n_training > 0) {
        const double central =
            static_cast<double>(fit.central) / static_cast<double>(fit.n_training);
        if (central > 0.9) result.report.flagged_weeks.push_back({s, group.second, central});
      }
      if (!fit.maps) {
        result.report.failures.push_back({s, s, group.second, fit.failure});
        continue;
      }
      for (std::size_t idx : indices) {
        const CvEntry& e = entries_[idx];
        HeldOutEntry out{e.key, e.cell, recalibrate(*fit.maps, e.cell), e.u};
        out.recalibrated[static_cast<std::size_t>(Method::kEnsemble)] =
            mix_cells(log.weights, out.recalibrated);
        result.held_out.push_back(std::move(out));
        ++log.outer.n_recalibrated;
        ++log.n_scored;
      }
    }
    if (log.outer.training_seasons.contains(s)) {
      throw Error(ErrorCode::kLeakage, "outer training set contains the test season");
    }
    return log;
  }

  void summarize(LosoResult& result) const {
    EvaluationReport& report = result.report;
    report.target = entries_.front().key.target;
    report.forecaster = entries_.front().key.forecaster;
    report.window_k = cfg_.window_k;
    report.n_entries = entries_.size();
    report.n_scored = result.held_out.size();
    if (result.held_out.empty()) {
      throw Error(ErrorCode::kInsufficientData, "no held-out entry could be recalibrated");
    }
    const double n = static_cast<double>(result.held_out.size());
    std::vector<double> pits(result.held_out.size());

    double before = 0.0;
    for (std::size_t i = 0; i < result.held_out.size(); ++i) {
      const auto& e = result.held_out[i];
      before += log_score_of_mass(e.original.mass, cfg_.score_floor);
      pits[i] = e.original.pit(e.u);
    }
    report.mean_log_score_before = before / n;
    report.pit_entropy_before = pit_entropy(pits, cfg_.entropy_bins).value;

    for (Method m : {Method::kNonparametric, Method::kBeta, Method::kNull, Method::kEnsemble}) {
      const auto slot = static_cast<std::size_t>(m);
      double total = 0.0;
      for (std::size_t i = 0; i < result.held_out.size(); ++i) {
        const auto& e = result.held_out[i];
        total += log_score_of_mass(e.recalibrated[slot].mass, cfg_.score_floor);
        pits[i] = e.recalibrated[slot].pit(e.u);
      }
      report.after.push_back({m, total / n, pit_entropy(pits, cfg_.entropy_bins).value});
    }
    report.uniform_band = uniform_entropy_band(result.held_out.size(), cfg_.entropy_bins,
                                               cfg_.band_coverage, cfg_.band_samples, cfg_.seed);
  }

  std::vector<CvEntry> entries_;
  CvConfig cfg_;
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups_;
  std::set<int> seasons_;
  std::map<std::vector<int>, ComponentFit> cache_;
};

}  // namespace

LosoResult nested_loso(std::vector<CvEntry> entries, const CvConfig& cfg) {
  cfg.validate();
  if (entries.empty()) {
    throw Error(ErrorCode::kInsufficientSeasons, "no entries for nested leave-one-season-out");
  }
  return LosoRunner(std::move(entries), cfg).run();
}

EvaluationReport nested_loso(const ForecastArchive& archive, const std::string& forecaster,
                             const std::string& target, const CvConfig& cfg) {
  return nested_loso(collect_entries(archive, forecaster, target, cfg.pit), cfg).report;
}

std::vector<SweepRow> window_sweep(const ForecastArchive& archive, const std::string& forecaster,
                                   const std::string& target, const std::vector<int>& k_values,
                                   const CvConfig& cfg) {
  const std::vector<CvEntry> entries = collect_entries(archive, forecaster, target, cfg.pit);
  std::vector<SweepRow> rows;
  for (int k : k_values) {
    CvConfig local = cfg;
    local.window_k = k;
    const EvaluationReport report = nested_loso(entries, local).report;
    for (const auto& s : report.after) rows.push_back({k, s.method, s.mean_log_score});
  }
  return rows;
}

namespace {

// Leave-one-season-out linear pool of per-component observed cells
// (cells[c][i] for component c, entry i).
std::vector<ObservedCell> pool_loso(const std::vector<std::vector<ObservedCell>>& cells,
                                    const std::vector<int>& seasons,
                                    std::vector<std::pair<int, EnsembleWeights>>* weights_out) {
  const std::size_t n = seasons.size();
  std::vector<ObservedCell> pooled(n);
  const std::set<int> unique(seasons.begin(), seasons.end());
  for (int s : unique) {
    std::vector<std::vector<double>> q;
    for (std::size_t i = 0; i < n; ++i) {
      if (seasons[i] == s) continue;
      std::vector<double> row;
      for (const auto& component : cells) row.push_back(component[i].mass);
      q.push_back(std::move(row));
    }
    const EnsembleWeights w = fit_ensemble_weights(q).weights;
    if (weights_out) weights_out->emplace_back(s, w);
    for (std::size_t i = 0; i < n; ++i) {
      if (seasons[i] != s) continue;
      ObservedCell mixed{0.0, 0.0, cells.front()[i].clamped, cells.front()[i].top};
      for (std::size_t c = 0; c < cells.size(); ++c) {
        mixed.below += w.w[c] * cells[c][i].below;
        mixed.mass += w.w[c] * cells[c][i].mass;
      }
      pooled[i] = mixed;
    }
  }
  return pooled;
}

double mean_score(const std::vector<ObservedCell>& cells, const std::optional<double>& floor) {
  double total = 0.0;
  for (const auto& c : cells) total += log_score_of_mass(c.mass, floor);
  return total / static_cast<double>(cells.size());
}

}  // namespace

OrderResult order_experiment(const ForecastArchive& archive,
                             const std::vector<std::string>& component_forecasters,
                             const std::string& target, const CvConfig& cfg) {
  cfg.validate();
  if (component_forecasters.empty()) {
    throw Error(ErrorCode::kKeyMisalignment, "order experiment needs at least one component");
  }
  std::vector<std::vector<CvEntry>> components;
  for (const auto& name : component_forecasters) {
    components.push_back(collect_entries(archive, name, target, cfg.pit));
  }
  const auto& base = components.front();
  if (base.empty()) {
    throw Error(ErrorCode::kKeyMisalignment, "component '" + component_forecasters.front() +
                                                 "' has no entries for target '" + target + "'");
  }
  for (std::size_t c = 1; c < components.size(); ++c) {
    bool aligned = components[c].size() == base.size();
    for (std::size_t i = 0; aligned && i < base.size(); ++i) {
      aligned = observation_key(components[c][i].key) == observation_key(base[i].key);
    }
    if (!aligned) {
      throw Error(ErrorCode::kKeyMisalignment,
                  "component '" + component_forecasters[c] + "' covers different keys");
    }
  }

  const std::size_t n = base.size();
  std::vector<int> seasons(n);
  std::vector<std::vector<ObservedCell>> original(components.size(), std::vector<ObservedCell>(n));
  for (std::size_t i = 0; i < n; ++i) seasons[i] = base[i].key.season;
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) original[c][i] = components[c][i].cell;
  }

  OrderResult result;
  // Pool forecasts for each season use weights fitted on the other seasons.
  const std::vector<ObservedCell> pool = pool_loso(original, seasons, &result.pool_weights);

  // E-C: the pool is treated as a forecaster of its own.
  std::vector<CvEntry> pool_entries(n);
  for (std::size_t i = 0; i < n; ++i) {
    pool_entries[i] = {base[i].key, pool[i], base[i].u};
    pool_entries[i].key.forecaster = "pool";
  }
  const LosoResult pooled_recal = nested_loso(std::move(pool_entries), cfg);

  // C-E: recalibrate each component, then pool.
  std::vector<LosoResult> recal;
  for (auto& entries : components) recal.push_back(nested_loso(entries, cfg));

  // Score everything on entries held out successfully in every run.
  std::map<ObservationKey, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[observation_key(base[i].key)] = i;
  std::vector<int> hits(n, 0);
  auto mark = [&](const LosoResult& r) {
    for (const auto& e : r.held_out) ++hits[index.at(observation_key(e.key))];
  };
  mark(pooled_recal);
  for (const auto& r : recal) mark(r);
  const int required = static_cast<int>(recal.size() + 1);

  std::vector<std::size_t> common;
  for (std::size_t i = 0; i < n; ++i) {
    if (hits[i] == required) common.push_back(i);
  }
  if (common.empty()) {
    throw Error(ErrorCode::kInsufficientData, "no entry was scored by every ordering");
  }

  auto ensemble_cells = [&](const LosoResult& r) {
    std::map<std::size_t, ObservedCell> out;
    for (const auto& e : r.held_out) {
      out[index.at(observation_key(e.key))] =
          e.recalibrated[static_cast<std::size_t>(Method::kEnsemble)];
    }
    return out;
  };

  std::vector<ObservedCell> original_common;
  std::vector<ObservedCell> ec_common;
  const auto ec_cells = ensemble_cells(pooled_recal);
  std::vector<int> common_seasons;
  for (std::size_t i : common) {
    original_common.push_back(pool[i]);
    ec_common.push_back(ec_cells.at(i));
    common_seasons.push_back(seasons[i]);
  }
  std::vector<std::vector<ObservedCell>> recal_common(recal.size());
  for (std::size_t c = 0; c < recal.size(); ++c) {
    const auto cells = ensemble_cells(recal[c]);
    for (std::size_t i : common) recal_common[c].push_back(cells.at(i));
  }
  const std::vector<ObservedCell> ce_common = pool_loso(recal_common, common_seasons, nullptr);

  result.n_scored = common.size();
  result.original = mean_score(original_common, cfg.score_floor);
  result.pool_then_recalibrate = mean_score(ec_common, cfg.score_floor);
  result.recalibrate_then_pool = mean_score(ce_common, cfg.score_floor);
  return result;
}

}  // namespace recal
