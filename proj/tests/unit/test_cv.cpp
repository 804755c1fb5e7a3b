#include <gtest/gtest.h>

#include <numeric>

#include "recal/cv.hpp"
#include "recal/error.hpp"
#include "recal/synthetic.hpp"
#include "support/helpers.hpp"

namespace recal {
namespace {

GaussianScenario scenario(ForecasterKind kind, int seasons, int per_season, std::uint64_t seed) {
  GaussianScenario s;
  s.kind = kind;
  s.scale = kind == ForecasterKind::kOverconfident ? 0.5 : 2.0;
  s.n_seasons = seasons;
  s.n_per_season = per_season;
  s.seed = seed;
  return s;
}

CvConfig fast_config(int k = 0) {
  CvConfig cfg;
  cfg.window_k = k;
  cfg.band_samples = 200;
  return cfg;
}

TEST(CvConfig, Validation) {
  CvConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.window_k = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.n_knots = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.uniform_blend = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(NestedLoso, ThreeSeasonSetArithmetic) {
  const auto a = generate(scenario(ForecasterKind::kUnderconfident, 3, 60, 1));
  const auto report = nested_loso(a, "underconfident", "synthetic", fast_config());
  ASSERT_EQ(report.folds.size(), 3u);
  const FoldLog& fold3 = report.folds[2];
  EXPECT_EQ(fold3.test_season, 3);
  ASSERT_EQ(fold3.inner.size(), 2u);
  EXPECT_EQ(fold3.inner[0].held_season, 1);
  EXPECT_EQ(fold3.inner[0].training_seasons, (std::set<int>{2}));
  EXPECT_EQ(fold3.inner[1].held_season, 2);
  EXPECT_EQ(fold3.inner[1].training_seasons, (std::set<int>{1}));
  EXPECT_EQ(fold3.outer.training_seasons, (std::set<int>{1, 2}));
  EXPECT_EQ(fold3.weight_seasons, (std::set<int>{1, 2}));
  EXPECT_EQ(fold3.inner[0].n_training, 60u);
  EXPECT_EQ(fold3.outer.n_training, 120u);
  EXPECT_EQ(report.n_scored, 180u);
}

TEST(NestedLoso, NineSeasonsGiveNineFoldsWithoutLeakage) {
  const auto a = generate(scenario(ForecasterKind::kBiased, 9, 40, 2));
  const auto report = nested_loso(a, "biased", "synthetic", fast_config());
  ASSERT_EQ(report.folds.size(), 9u);
  for (const auto& fold : report.folds) {
    EXPECT_FALSE(fold.skipped);
    EXPECT_EQ(fold.outer.training_seasons.size(), 8u);
    EXPECT_FALSE(fold.outer.training_seasons.contains(fold.test_season));
    EXPECT_FALSE(fold.weight_seasons.contains(fold.test_season));
    EXPECT_EQ(fold.inner.size(), 8u);
    for (const auto& stage : fold.inner) {
      EXPECT_FALSE(stage.training_seasons.contains(fold.test_season));
      EXPECT_FALSE(stage.training_seasons.contains(stage.held_season));
      EXPECT_EQ(stage.training_seasons.size(), 7u);
    }
    fold.weights.validate();
    EXPECT_EQ(fold.n_scored, 40u);
  }
}

TEST(NestedLoso, IdealForecasterLeftNearlyUntouched) {
  const auto a = generate(scenario(ForecasterKind::kIdeal, 5, 1000, 3));
  const auto report = nested_loso(a, "ideal", "synthetic", fast_config());
  double null_weight = 0.0;
  for (const auto& fold : report.folds) null_weight += fold.weights.w[2];
  EXPECT_GE(null_weight / static_cast<double>(report.folds.size()), 0.5);
  const double change = report.summary(Method::kEnsemble).mean_log_score -
                        report.mean_log_score_before;
  EXPECT_LE(std::abs(change), 0.01);
  EXPECT_EQ(report.summary(Method::kNull).mean_log_score, report.mean_log_score_before);
}

TEST(NestedLoso, RecalibrationHelpsMiscalibratedForecaster) {
  const auto a = generate(scenario(ForecasterKind::kOverconfident, 4, 1000, 4));
  const auto report = nested_loso(a, "overconfident", "synthetic", fast_config());
  for (Method m : {Method::kNonparametric, Method::kBeta, Method::kEnsemble}) {
    EXPECT_GT(report.summary(m).mean_log_score, report.mean_log_score_before + 0.1);
    EXPECT_GT(report.summary(m).pit_entropy, report.pit_entropy_before);
  }
  EXPECT_LT(report.uniform_band.lo, report.uniform_band.hi);
}

TEST(NestedLoso, DeterministicReports) {
  const auto a = generate(scenario(ForecasterKind::kUnderconfident, 3, 200, 5));
  CvConfig cfg = fast_config();
  cfg.pit = {PitMode::kRandomized, 9};
  const auto r1 = nested_loso(a, "underconfident", "synthetic", cfg);
  const auto r2 = nested_loso(a, "underconfident", "synthetic", cfg);
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_EQ(r1.after[m].mean_log_score, r2.after[m].mean_log_score);
    EXPECT_EQ(r1.after[m].pit_entropy, r2.after[m].pit_entropy);
  }
  EXPECT_EQ(r1.uniform_band.lo, r2.uniform_band.lo);
  for (std::size_t f = 0; f < r1.folds.size(); ++f) {
    EXPECT_EQ(r1.folds[f].weights.w, r2.folds[f].weights.w);
  }
}

TEST(NestedLoso, InsufficientSeasons) {
  const auto a = generate(scenario(ForecasterKind::kIdeal, 2, 50, 6));
  try {
    nested_loso(a, "ideal", "synthetic", fast_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSeasons);
  }
}

// Week 2 has too few entries to fit; those folds are logged and skipped.
TEST(NestedLoso, SparseWeeksAreReportedNotFatal) {
  auto s = scenario(ForecasterKind::kUnderconfident, 4, 40, 7);
  s.n_weeks = 1;
  auto a = generate(s);
  const auto support = a.support_for("synthetic");
  for (int season = 1; season <= 4; ++season) {
    const ForecastKey key{"underconfident", "synthetic", "L1", season, 2};
    a.insert(key, discretize({0.0, 2.0}, support));
    a.set_observation(observation_key(key), Observation{0.1 * season});
  }
  const auto report = nested_loso(a, "underconfident", "synthetic", fast_config());
  EXPECT_FALSE(report.failures.empty());
  for (const auto& f : report.failures) EXPECT_EQ(f.week, 2);
  EXPECT_EQ(report.n_scored, 160u);
  EXPECT_EQ(report.n_entries, 164u);
}

// Point-mass forecasts put every PIT at 0.5.
TEST(NestedLoso, FlagsWeeksWithCentralPits) {
  auto s = scenario(ForecasterKind::kUnderconfident, 3, 50, 8);
  auto a = generate(s);
  const auto support = a.support_for("synthetic");
  for (int season = 1; season <= 3; ++season) {
    for (int loc = 0; loc < 20; ++loc) {
      const ForecastKey key{"underconfident", "synthetic", "P" + std::to_string(loc), season, 2};
      std::vector<double> m(support->size(), 0.0);
      m[160] = 1.0;
      a.insert(key, BinnedForecast{support, m});
      a.set_observation(observation_key(key), Observation{0.01 + 0.001 * loc});
    }
  }
  const auto report = nested_loso(a, "underconfident", "synthetic", fast_config());
  ASSERT_FALSE(report.flagged_weeks.empty());
  for (const auto& w : report.flagged_weeks) {
    EXPECT_EQ(w.week, 2);
    EXPECT_GT(w.central_fraction, 0.9);
  }
}

TEST(WindowSweep, FourRowsPerWindow) {
  GaussianScenario s = scenario(ForecasterKind::kBiased, 3, 120, 9);
  s.shift = 0.5;
  s.n_weeks = 6;
  const auto a = generate(s);
  const std::vector<int> ks = {0, 1, 3, 5};
  const auto rows = window_sweep(a, "biased", "synthetic", ks, fast_config());
  ASSERT_EQ(rows.size(), 16u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].window_k, ks[i / 4]);
    EXPECT_EQ(static_cast<std::size_t>(rows[i].method), i % 4);
  }
}

ForecastArchive two_forecasters(bool identical) {
  SplitSignalScenario s;
  s.n_per_season = 150;
  s.n_seasons = 3;
  s.seed = 10;
  auto a = generate(s);
  if (!identical) return a;
  ForecastArchive b;
  for (const auto& [key, f] : a.forecasts()) {
    if (key.forecaster != "C1") continue;
    b.insert(key, f);
    auto twin = key;
    twin.forecaster = "C1b";
    b.insert(twin, f);
  }
  for (const auto& [key, y] : a.observations()) b.set_observation(key, y);
  return b;
}

TEST(OrderExperiment, SingleComponentOrderingsCoincide) {
  const auto a = two_forecasters(false);
  const auto r = order_experiment(a, {"C1"}, "synthetic", fast_config());
  EXPECT_NEAR(r.recalibrate_then_pool, r.pool_then_recalibrate, 1e-12);
  const auto plain = nested_loso(a, "C1", "synthetic", fast_config());
  EXPECT_NEAR(r.pool_then_recalibrate, plain.summary(Method::kEnsemble).mean_log_score, 1e-12);
  EXPECT_NEAR(r.original, plain.mean_log_score_before, 1e-12);
}

TEST(OrderExperiment, IdenticalComponentsOrderingsEqual) {
  const auto a = two_forecasters(true);
  const auto r = order_experiment(a, {"C1", "C1b"}, "synthetic", fast_config());
  const auto plain = nested_loso(a, "C1", "synthetic", fast_config());
  EXPECT_NEAR(r.original, plain.mean_log_score_before, 1e-12);
  EXPECT_NEAR(r.recalibrate_then_pool, r.pool_then_recalibrate, 1e-12);
  ASSERT_EQ(r.pool_weights.size(), 3u);
}

TEST(OrderExperiment, KeyMisalignment) {
  auto a = two_forecasters(false);
  a.insert({"C2", "synthetic", "extra", 1, 1}, discretize({0.0, 1.0}, a.support_for("synthetic")));
  a.set_observation({"synthetic", "extra", 1, 1}, Observation{0.0});
  try {
    order_experiment(a, {"C1", "C2"}, "synthetic", fast_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKeyMisalignment);
  }
}

}  // namespace
}  // namespace recal
