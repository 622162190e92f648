#include <benchmark/benchmark.h>

#include <filesystem>

#include "chipcost/config_io.hpp"
#include "chipcost/cost_engine.hpp"
#include "chipcost/sweep.hpp"
#include "chipcost/wafer_geometry.hpp"

using namespace chipcost;

namespace {

const std::filesystem::path kData = CHIPCOST_DATA_DIR;

std::shared_ptr<const ProcessLibrary> Library() {
  static const auto lib = std::make_shared<const ProcessLibrary>(ParseLibrary(kData / "library"));
  return lib;
}

SystemSpec GraphProcessor() {
  return ParseSystemXml(ReadTextFile(kData / "systems" / "graph_processor.xml"), "graph_processor.xml");
}

SweepSpec CountSweep() {
  const auto path = kData / "sweeps" / "chiplet_count.json";
  return ParseSweepSpec(ReadTextFile(path), path.string());
}

ValidatedSystem Split(int n) {
  SystemSpec spec = GraphProcessor();
  HomogeneousSplit rule = *CountSweep().split;
  rule.count = n;
  ApplyHomogeneousSplit(spec, rule, *Library());
  return ValidatedSystem::Validate(spec, Library());
}

void BM_PackGrid(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(PackGrid(side + 0.1, side + 0.1, 147.0));
}
BENCHMARK(BM_PackGrid)->Arg(2)->Arg(10)->Arg(29);

void BM_PackFree(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(PackFree(side + 0.1, side + 0.1, 147.0));
}
BENCHMARK(BM_PackFree)->Arg(2)->Arg(10)->Arg(29);

void BM_EvaluateCold(benchmark::State& state) {
  const ValidatedSystem vs = Split(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    GeometryCache cache;
    benchmark::DoNotOptimize(Evaluate(vs, {&cache}));
  }
}
BENCHMARK(BM_EvaluateCold)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EvaluateWarm(benchmark::State& state) {
  const ValidatedSystem vs = Split(static_cast<int>(state.range(0)));
  GeometryCache cache;
  for (auto _ : state) benchmark::DoNotOptimize(Evaluate(vs, {&cache}));
}
BENCHMARK(BM_EvaluateWarm)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ChipletCountSweep(benchmark::State& state) {
  const SweepSpec spec = CountSweep();
  const SystemSpec gp = GraphProcessor();
  for (auto _ : state) {
    GeometryCache cache;
    benchmark::DoNotOptimize(RunSweep(spec, gp, *Library(), {static_cast<int>(state.range(0)), &cache}));
  }
}
BENCHMARK(BM_ChipletCountSweep)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
