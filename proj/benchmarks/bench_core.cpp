#include "icsatk/detect.hpp"
#include "icsatk/metrics.hpp"
#include "icsatk/pareto.hpp"
#include "icsatk/plant.hpp"
#include "icsatk/rng.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>

namespace {

using namespace icsatk;

/// Full-horizon attack-free run; the argument is samples per hour.
void BM_Simulate(benchmark::State& state) {
  plant::PlantConfig cfg;
  cfg.samples_per_hour = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(plant::simulate({}, cfg).operating_cost);
  }
}
BENCHMARK(BM_Simulate)->Arg(50)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

std::vector<emo::Point> random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<emo::Point> pts(n, emo::Point(dim));
  for (auto& p : pts) {
    for (auto& v : p) v = rng.uniform();
  }
  return pts;
}

void BM_NonDominatedSort(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 2, 7);
  for (auto _ : state) benchmark::DoNotOptimize(emo::non_dominated_sort(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NonDominatedSort)->RangeMultiplier(2)->Range(50, 800)->Complexity();

/// Hypervolume of points on the unit simplex, which are mutually
/// non-dominated; the second argument is the dimension.
void BM_Hypervolume(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(1));
  auto front = random_points(static_cast<std::size_t>(state.range(0)), dim, 11);
  for (auto& p : front) {
    double sum = 0.0;
    for (double v : p) sum += v;
    for (auto& v : p) v /= sum;
  }
  const emo::Point ref(dim, 1.1);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::hypervolume(front, ref));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hypervolume)->Args({100, 2})->Args({1000, 2})->Args({100, 3})->Args({400, 3});

void BM_Classify(benchmark::State& state) {
  plant::PlantConfig cfg;
  cfg.samples_per_hour = 50;
  const auto ranges = plant::record_signal_ranges(2, cfg);
  detect::TrainingGrid grid;
  grid.attack_runs = 40;
  grid.normal_runs = 10;
  grid.run_hours = 8.0;
  grid.stride = 5;
  const auto data = detect::generate_training_data(cfg, ranges, grid);
  detect::DetectorModel model;
  switch (state.range(0)) {
  case 0: model = detect::train_cart(data); break;
  case 1: model = detect::train_random_forest(data); break;
  default: model = detect::train_adaboost(data); break;
  }
  state.SetLabel(std::string(detect::to_string(model.kind())));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.classify(data.rows[i]));
    i = (i + 1) % data.size();
  }
}
BENCHMARK(BM_Classify)->DenseRange(0, 2);

} // namespace

BENCHMARK_MAIN();
