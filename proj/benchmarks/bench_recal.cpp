#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "recal/beta.hpp"
#include "recal/cv.hpp"
#include "recal/metrics.hpp"
#include "recal/pit.hpp"
#include "recal/recalibrate.hpp"
#include "recal/spline_map.hpp"
#include "recal/synthetic.hpp"

namespace {

using namespace recal;

std::vector<double> beta_sample(double a, double b, std::size_t n) {
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  std::vector<double> xs(n);
  for (double& x : xs) {
    const double u = ga(rng);
    x = u / (u + gb(rng));
  }
  return xs;
}

ForecastArchive archive(int n_per_season, int n_seasons) {
  GaussianScenario s;
  s.kind = ForecasterKind::kUnderconfident;
  s.scale = 2.0;
  s.n_per_season = n_per_season;
  s.n_seasons = n_seasons;
  s.n_weeks = 10;
  return generate(s);
}

void BM_Generate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(archive(static_cast<int>(state.range(0)), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BuildPits(benchmark::State& state) {
  const auto a = archive(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_pit_dataset(a, [](const ForecastKey&) { return true; }));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildPits)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_FitNonparametric(benchmark::State& state) {
  const auto xs = beta_sample(2.0, 2.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_nonparametric(xs, default_knot_count(xs.size())));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitNonparametric)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_FitBeta(benchmark::State& state) {
  const auto xs = beta_sample(0.7, 1.4, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_beta_mle(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitBeta)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_EnsembleWeights(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> q(static_cast<std::size_t>(state.range(0)), std::vector<double>(3));
  for (auto& row : q) {
    for (double& v : row) v = u(rng) * u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_ensemble_weights(q));
}
BENCHMARK(BM_EnsembleWeights)->Arg(100)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ApplyMap(benchmark::State& state) {
  const auto a = archive(100, 1);
  const auto& f = a.forecasts().begin()->second;
  const CorrectionMap spline(fit_nonparametric(beta_sample(2.0, 2.0, 5000), 25));
  const CorrectionMap beta(BetaParams{0.7, 1.4});
  const CorrectionMap& m = state.range(0) == 0 ? spline : beta;
  for (auto _ : state) benchmark::DoNotOptimize(apply_map(m, f));
  state.SetLabel(state.range(0) == 0 ? "nonparam" : "beta");
}
BENCHMARK(BM_ApplyMap)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_PitEntropy(benchmark::State& state) {
  const auto xs = beta_sample(1.0, 1.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pit_entropy(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PitEntropy)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_NestedLoso(benchmark::State& state) {
  const auto a = archive(static_cast<int>(state.range(0)), 5);
  CvConfig cfg;
  cfg.band_samples = 200;
  for (auto _ : state) benchmark::DoNotOptimize(nested_loso(a, "underconfident", "synthetic", cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 5);
}
BENCHMARK(BM_NestedLoso)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
