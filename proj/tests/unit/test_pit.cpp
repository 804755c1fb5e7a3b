#include <gtest/gtest.h>

#include <map>

#include "recal/error.hpp"
#include "recal/pit.hpp"
#include "recal/synthetic.hpp"
#include "support/helpers.hpp"

namespace recal {
namespace {

using testing::ks_uniform;
using testing::unit_forecast;

TEST(ComputePit, MidBinExamples) {
  const auto f = unit_forecast({0.2, 0.5, 0.3});
  EXPECT_DOUBLE_EQ(compute_pit(f, Observation{1.5}), 0.45);
  EXPECT_DOUBLE_EQ(compute_pit(f, Observation{0.5}), 0.10);
  EXPECT_DOUBLE_EQ(compute_pit(f, Observation{3.0}), 0.85);
}

TEST(ComputePit, PointMassGivesOneHalf) {
  std::vector<double> m(21, 0.0);
  m[10] = 1.0;
  EXPECT_DOUBLE_EQ(compute_pit(unit_forecast(m), Observation{10.3}), 0.5);
  m[10] = 1.0 - 2e-6;
  m[9] = 1e-6;
  m[11] = 1e-6;
  EXPECT_NEAR(compute_pit(unit_forecast(m), Observation{10.3}), 0.5, 1e-5);
}

TEST(ComputePit, RandomizedStaysInObservedBin) {
  const auto f = unit_forecast({0.2, 0.5, 0.3});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double p = compute_pit(f, Observation{1.5}, {PitMode::kRandomized, seed});
    EXPECT_GE(p, 0.2);
    EXPECT_LE(p, 0.7);
    EXPECT_EQ(p, compute_pit(f, Observation{1.5}, {PitMode::kRandomized, seed}));
  }
}

TEST(ComputePit, ClampedObservationIsFlagged) {
  const auto f = unit_forecast({0.2, 0.5, 0.3});
  const auto cell = observed_cell(f, Observation{-4.0});
  EXPECT_TRUE(cell.clamped);
  EXPECT_DOUBLE_EQ(cell.pit(), 0.1);
}

TEST(ComputePit, UniformForecastTakesBinCenters) {
  constexpr std::size_t B = 40;
  const auto f = unit_forecast(std::vector<double>(B, 1.0 / B));
  std::map<double, int> counts;
  for (int rep = 0; rep < 3; ++rep) {
    for (std::size_t j = 0; j < B; ++j) {
      ++counts[compute_pit(f, Observation{j + 0.25 + 0.5 * rep / 3.0})];
    }
  }
  ASSERT_EQ(counts.size(), B);
  std::size_t j = 1;
  for (const auto& [value, n] : counts) {
    EXPECT_NEAR(value, (2.0 * j - 1.0) / (2.0 * B), 1e-14);
    EXPECT_EQ(n, 3);
    ++j;
  }
}

ForecastArchive tiny_archive() {
  ForecastArchive a;
  for (int s = 1; s <= 3; ++s) {
    const ForecastKey k{"F", "t", "L1", s, 1};
    a.insert(k, unit_forecast({0.2, 0.5, 0.3}));
    a.set_observation(observation_key(k), Observation{0.5 + s - 1});
  }
  return a;
}

TEST(BuildPitDataset, CountsAndOrder) {
  const auto a = tiny_archive();
  const auto d = build_pit_dataset(a, [](const ForecastKey&) { return true; });
  ASSERT_EQ(d.size(), 3u);
  EXPECT_DOUBLE_EQ(d.records[0].pit, 0.10);
  EXPECT_DOUBLE_EQ(d.records[1].pit, 0.45);
  EXPECT_DOUBLE_EQ(d.records[2].pit, 0.85);
  EXPECT_TRUE(build_pit_dataset(a, [](const ForecastKey&) { return false; }).empty());
}

TEST(BuildPitDataset, IdenticalInputsGiveIdenticalPits) {
  ForecastArchive a;
  for (const char* loc : {"A", "B"}) {
    const ForecastKey k{"F", "t", loc, 1, 1};
    a.insert(k, unit_forecast({0.3, 0.7}));
    a.set_observation(observation_key(k), Observation{1.4});
  }
  const auto d = build_pit_dataset(a, [](const ForecastKey&) { return true; });
  EXPECT_EQ(d.records[0].pit, d.records[1].pit);
}

TEST(BuildPitDataset, RandomizedDeterministicInSeed) {
  const auto a = generate(GaussianScenario{.n_per_season = 50, .seed = 4});
  const auto all = [](const ForecastKey&) { return true; };
  const auto d1 = build_pit_dataset(a, all, {PitMode::kRandomized, 7});
  const auto d2 = build_pit_dataset(a, all, {PitMode::kRandomized, 7});
  const auto d3 = build_pit_dataset(a, all, {PitMode::kRandomized, 8});
  EXPECT_EQ(d1.values(), d2.values());
  EXPECT_NE(d1.values(), d3.values());
}

TEST(BuildPitDataset, MissingObservationListsKeys) {
  auto a = tiny_archive();
  a.insert({"F", "t", "L2", 1, 1}, unit_forecast({0.2, 0.5, 0.3}));
  a.insert({"F", "t", "L3", 2, 1}, unit_forecast({0.2, 0.5, 0.3}));
  try {
    build_pit_dataset(a, [](const ForecastKey&) { return true; });
    FAIL() << "expected MissingObservation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingObservation);
    const std::string what = e.what();
    EXPECT_NE(what.find("L2"), std::string::npos);
    EXPECT_NE(what.find("L3"), std::string::npos);
  }
  // Unselected entries without observations are fine.
  EXPECT_EQ(build_pit_dataset(a, [](const ForecastKey& k) { return k.location == "L1"; }).size(),
            3u);
}

TEST(WindowSelect, WeekRange) {
  const auto keep = window_select("t", 6, 3);
  for (int w = 0; w <= 12; ++w) {
    EXPECT_EQ(keep({"F", "t", "L", 1, w}), w >= 3 && w <= 9) << w;
  }
  EXPECT_FALSE(keep({"F", "u", "L", 1, 6}));
  EXPECT_TRUE(keep({"G", "t", "other", 1, 6}));
}

TEST(WindowSelect, ZeroWidthAndExclusions) {
  const auto only = window_select("t", 4, 0);
  EXPECT_TRUE(only({"F", "t", "L", 1, 4}));
  EXPECT_FALSE(only({"F", "t", "L", 1, 3}));
  EXPECT_FALSE(only({"F", "t", "L", 1, 5}));

  const auto keep = window_select("t", 4, 2, {2, 5});
  for (int s = 1; s <= 6; ++s) EXPECT_EQ(keep({"F", "t", "L", s, 4}), s != 2 && s != 5);
  EXPECT_THROW(window_select("t", 4, -1), Error);
}

TEST(WindowSelect, TruncatesAtSeasonStart) {
  const auto keep = window_select("t", 1, 3);
  EXPECT_TRUE(keep({"F", "t", "L", 1, 4}));
  EXPECT_FALSE(keep({"F", "t", "L", 1, 5}));
}

PitDataset ideal_pits(PitMode mode, std::uint64_t seed) {
  GaussianScenario s;
  s.kind = ForecasterKind::kIdeal;
  s.n_per_season = 10000;
  s.n_seasons = 1;
  s.seed = seed;
  return build_pit_dataset(generate(s), [](const ForecastKey&) { return true; }, {mode, seed});
}

TEST(PitUniformity, MidBinIdealConvergesToIdentity) {
  EXPECT_LT(ks_uniform(ideal_pits(PitMode::kMidBin, 21).values()), 0.02);
}

TEST(PitUniformity, RandomizedIdealIsUniform) {
  EXPECT_LT(ks_uniform(ideal_pits(PitMode::kRandomized, 22).values()), 0.02);
}

}  // namespace
}  // namespace recal
