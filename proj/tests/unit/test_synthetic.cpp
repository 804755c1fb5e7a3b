#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "recal/error.hpp"
#include "recal/pit.hpp"
#include "recal/synthetic.hpp"
#include "support/helpers.hpp"

namespace recal {
namespace {

const double kUnderconfidentGain = 0.5 * std::log(2.0) - 0.25;
const double kOverconfidentGain = 0.5 - 0.5 * std::log(2.0);

double mean_of(const BinnedForecast& f) {
  double m = 0.0;
  const auto e = f.support->edges();
  for (std::size_t k = 0; k < f.size(); ++k) m += f.mass[k] * 0.5 * (e[k] + e[k + 1]);
  return m;
}

double variance_of(const BinnedForecast& f) {
  const double mu = mean_of(f);
  double v = 0.0;
  const auto e = f.support->edges();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double c = 0.5 * (e[k] + e[k + 1]) - mu;
    v += f.mass[k] * c * c;
  }
  return v;
}

TEST(NormalSpec, QuantileInvertsCdf) {
  const NormalSpec n{1.5, 4.0};
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.8, 0.999, 1.0 - 1e-9}) {
    const double x = n.quantile(p);
    const double back = p <= 0.5 ? n.cdf(x) : 1.0 - n.survival(x);
    EXPECT_NEAR(back, p, 1e-12 * std::max(1.0, 1.0 / p) * p + 1e-15) << p;
  }
  EXPECT_THROW(n.quantile(0.0), Error);
  EXPECT_THROW(n.quantile(1.0), Error);
}

TEST(NormalSpec, IntervalMassInTails) {
  const NormalSpec n{0.0, 1.0};
  EXPECT_NEAR(n.interval_mass(7.0, 8.0), 0.5 * (std::erfc(7.0 / std::numbers::sqrt2) -
                                                std::erfc(8.0 / std::numbers::sqrt2)),
              1e-25);
  EXPECT_GT(n.interval_mass(9.0, 9.05), 0.0);
  EXPECT_NEAR(n.interval_mass(-1.0, 1.0), std::erf(1.0 / std::numbers::sqrt2), 1e-15);
  EXPECT_EQ(n.interval_mass(1.0, 1.0), 0.0);
}

TEST(Generate, DeterministicInSeed) {
  GaussianScenario s;
  s.kind = ForecasterKind::kBiased;
  s.shift = 0.3;
  s.n_per_season = 30;
  s.seed = 42;
  const auto a = generate(s);
  const auto b = generate(s);
  ASSERT_EQ(a.size(), 90u);
  for (const auto& [key, y] : a.observations()) {
    EXPECT_EQ(y.value, b.observation(key)->value);
  }
  for (const auto& [key, f] : a.forecasts()) EXPECT_EQ(f.mass, b.find(key)->mass);
  s.seed = 43;
  EXPECT_NE(generate(s).observations().begin()->second.value,
            a.observations().begin()->second.value);
}

TEST(Generate, KeysCoverSeasonsWeeksAndLocations) {
  GaussianScenario s;
  s.n_per_season = 12;
  s.n_seasons = 4;
  s.n_weeks = 3;
  const auto a = generate(s);
  EXPECT_EQ(a.size(), 48u);
  EXPECT_NE(a.find({"ideal", "synthetic", "L4", 4, 3}), nullptr);
  EXPECT_EQ(a.find({"ideal", "synthetic", "L5", 1, 1}), nullptr);
}

TEST(Generate, IdealForecastMatchesTruthShape) {
  GaussianScenario s;
  s.n_per_season = 50;
  s.truth_variance = 0.64;
  const auto a = generate(s);
  for (const auto& [key, f] : a.forecasts()) {
    EXPECT_NEAR(variance_of(f), 0.64 + s.bin_width * s.bin_width / 12.0, 1e-6);
    const NormalSpec truth{mean_of(f), 0.64};
    EXPECT_LT(testing::total_variation(f.mass, discretize(truth, f.support).mass), 1e-6);
  }
}

TEST(Generate, ClimatologicalIsMarginal) {
  GaussianScenario s;
  s.kind = ForecasterKind::kClimatological;
  s.n_per_season = 20;
  const auto a = generate(s);
  const auto expected = discretize(NormalSpec{0.0, 2.0}, a.support_for("synthetic")).mass;
  for (const auto& [key, f] : a.forecasts()) EXPECT_EQ(f.mass, expected);
}

TEST(Generate, UnderconfidentFigureScenario) {
  GaussianScenario s;
  s.kind = ForecasterKind::kUnderconfident;
  s.scale = 2.0;
  s.hyper_variance = 0.0;
  s.n_per_season = 20;
  const auto a = generate(s);
  const auto expected = discretize(NormalSpec{0.0, 2.0}, a.support_for("synthetic")).mass;
  for (const auto& [key, f] : a.forecasts()) EXPECT_EQ(f.mass, expected);
  const auto pair = oracle_pair(s);
  EXPECT_EQ(pair.forecast.variance, 2.0);
  EXPECT_EQ(pair.truth.variance, 1.0);
}

TEST(Generate, ValidatesScenario) {
  GaussianScenario s;
  s.support_lo = -2.0;
  s.support_hi = 2.0;
  EXPECT_THROW(generate(s), Error);
  s = {};
  s.scale = 0.0;
  EXPECT_THROW(generate(s), Error);
  s = {};
  s.bin_width = -1.0;
  EXPECT_THROW(generate(s), Error);
}

TEST(Generate, IdealPitsPassKolmogorovSmirnov) {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    GaussianScenario s;
    s.n_per_season = 500;
    s.n_seasons = 1;
    s.seed = 1000 + seed;
    const auto pits =
        build_pit_dataset(generate(s), [](const ForecastKey&) { return true; }).values();
    passes += testing::kolmogorov_pvalue(testing::ks_uniform(pits), pits.size()) > 0.01;
  }
  EXPECT_GE(passes, 190);
}

TEST(Generate, SplitSignalComponentsAreCalibrated) {
  SplitSignalScenario s;
  s.n_per_season = 2000;
  s.n_seasons = 1;
  s.seed = 3;
  const auto a = generate(s);
  EXPECT_EQ(a.size(), 4000u);
  for (const char* name : {"C1", "C2"}) {
    const auto pits = build_pit_dataset(a, [&](const ForecastKey& k) {
                        return k.forecaster == name;
                      }).values();
    EXPECT_GT(testing::kolmogorov_pvalue(testing::ks_uniform(pits), pits.size()), 0.001) << name;
  }
  EXPECT_NE(a.find({"C1", "synthetic", "L7", 1, 1}), nullptr);
  EXPECT_NE(a.find({"C2", "synthetic", "L7", 1, 1}), nullptr);
}

TEST(OraclePitDensity, IdealIsFlat) {
  const NormalSpec n{0.3, 2.0};
  for (double p : {0.001, 0.2, 0.5, 0.93}) EXPECT_NEAR(oracle_pit_density(n, n, p), 1.0, 1e-9);
  EXPECT_THROW(oracle_pit_density(n, n, 0.0), Error);
  EXPECT_THROW(oracle_pit_density(n, n, 1.0), Error);
}

TEST(OraclePitDensity, UnderconfidentClosedForm) {
  const NormalSpec f{0.0, 2.0};
  const NormalSpec h{0.0, 1.0};
  EXPECT_NEAR(oracle_pit_density(f, h, 0.5), std::numbers::sqrt2, 1e-9);
  for (double p : {0.01, 0.1, 0.37, 0.8, 0.999}) {
    const double x = f.quantile(p);
    EXPECT_NEAR(oracle_pit_density(f, h, p), std::numbers::sqrt2 * std::exp(-x * x / 4.0), 1e-9);
  }
}

TEST(OraclePitDensity, IntegratesToOne) {
  const NormalSpec f{0.0, 2.0};
  const NormalSpec h{0.0, 1.0};
  double err = 0.0;
  const double total = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double p) { return oracle_pit_density(f, h, p); }, 0.0, 1.0, 15, 1e-12, &err);
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Oracles, AnchorValues) {
  const NormalSpec h{0.0, 1.0};
  EXPECT_NEAR(oracle_entropy(h, h), 0.0, 1e-9);
  EXPECT_NEAR(oracle_logscore_gain(h, h), 0.0, 1e-12);
  EXPECT_NEAR(oracle_logscore_gain({0.0, 2.0}, h), kUnderconfidentGain, 1e-9);
  EXPECT_NEAR(oracle_entropy({0.0, 2.0}, h), -kUnderconfidentGain, 1e-6);
  EXPECT_NEAR(oracle_logscore_gain({0.0, 0.5}, h), kOverconfidentGain, 1e-9);
  EXPECT_NEAR(oracle_entropy({0.0, 0.5}, h), -kOverconfidentGain, 1e-6);
  // Biased by 0.5: KL of unit-variance normals is shift^2 / 2.
  EXPECT_NEAR(oracle_logscore_gain({0.5, 1.0}, h), 0.125, 1e-9);
}

TEST(Oracles, IdentityHoldsForEveryKind) {
  const std::pair<ForecasterKind, double> kinds[] = {
      {ForecasterKind::kIdeal, 1.0},         {ForecasterKind::kUnderconfident, 2.0},
      {ForecasterKind::kOverconfident, 0.5}, {ForecasterKind::kBiased, 1.0},
      {ForecasterKind::kClimatological, 1.0}};
  for (auto [kind, scale] : kinds) {
    GaussianScenario s;
    s.kind = kind;
    s.scale = scale;
    s.shift = 0.7;
    const auto [f, h] = oracle_pair(s);
    EXPECT_LT(std::abs(oracle_logscore_gain(f, h) + oracle_entropy(f, h)), 1e-5) << to_string(kind);
  }
  for (double scale : {0.2, 0.35, 3.0, 6.0}) {
    const NormalSpec f{0.4, scale};
    const NormalSpec h{0.0, 1.0};
    EXPECT_LT(std::abs(oracle_logscore_gain(f, h) + oracle_entropy(f, h)), 1e-5) << scale;
  }
}

TEST(ForecasterKind, Names) {
  for (auto k : {ForecasterKind::kIdeal, ForecasterKind::kUnderconfident,
                 ForecasterKind::kOverconfident, ForecasterKind::kBiased,
                 ForecasterKind::kClimatological}) {
    EXPECT_EQ(parse_forecaster_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_forecaster_kind("perfect"), Error);
}

}  // namespace
}  // namespace recal
