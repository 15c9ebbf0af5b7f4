#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <vector>

#include "vpath/annd.hpp"
#include "vpath/synth.hpp"

namespace {

const std::vector<vpath::Path>& corpus(std::size_t voyages) {
  static std::map<std::size_t, std::vector<vpath::Path>> cache;
  auto it = cache.find(voyages);
  if (it != cache.end()) return it->second;
  auto config = vpath::default_config();
  const double scale = static_cast<double>(voyages) / 124.0;
  for (auto& c : config.counts) c = std::max<std::size_t>(1, static_cast<std::size_t>(c * scale + 0.5));
  std::vector<vpath::Voyage> v;
  for (auto& l : vpath::generate(config)) v.push_back(std::move(l.voyage));
  return cache.emplace(voyages, vpath::make_paths(v)).first->second;
}

void BM_SerialExhaustive(benchmark::State& state) {
  const auto& paths = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vpath::distance_matrix_serial(paths));
}

void BM_TreeOneThread(benchmark::State& state) {
  const auto& paths = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vpath::distance_matrix(paths, {.threads = 1}));
}

void BM_TreeOpenMP(benchmark::State& state) {
  const auto& paths = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vpath::distance_matrix(paths));
}

} // namespace

BENCHMARK(BM_SerialExhaustive)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeOneThread)->Arg(16)->Arg(32)->Arg(124)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeOpenMP)->Arg(16)->Arg(32)->Arg(124)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
