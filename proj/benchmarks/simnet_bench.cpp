#include <benchmark/benchmark.h>

#include "traincap/experiment.hpp"
#include "traincap/simnet.hpp"

namespace {

using namespace traincap;

void BM_SimulateTrain(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const SimConfig cfg = preset("stack");
  const TrainSchedule sch = build_schedule(TrainSpec{n, cfg.geometry, 10'000'000'000, 0}, 0);
  for (auto _ : state) {
    const SimResult r = simulate_train(sch, cfg);
    benchmark::DoNotOptimize(estimate_receive_rate(r.record));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SimulateTrain)->Arg(50)->Arg(1000);

void BM_SweepExperiment(benchmark::State& state) {
  const ExperimentConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(ExperimentSet::sweep, cfg));
}
BENCHMARK(BM_SweepExperiment)->Unit(benchmark::kMicrosecond);

void BM_SameMethodExperiment(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.jitter = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(ExperimentSet::same_method, cfg));
}
BENCHMARK(BM_SameMethodExperiment)->Unit(benchmark::kMillisecond);

}  // namespace
