#include <benchmark/benchmark.h>

#include "ttm/experiments.hpp"
#include "ttm/hmm.hpp"
#include "ttm/model.hpp"
#include "ttm/simulation.hpp"

namespace {

ttm::ProcessModel default_model(std::size_t m) {
  ttm::EnsembleParams params;
  params.m = m;
  params.p = 0.6;
  params.q = 0.4;
  params.seed = 42;
  return ttm::generate_model(params);
}

void BM_RunSimulation(benchmark::State& state) {
  const auto model = default_model(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ttm::run_simulation(model, seed++));
}
BENCHMARK(BM_RunSimulation)->Arg(5)->Arg(10)->Arg(15);

void BM_BuildHmm(benchmark::State& state) {
  const auto model = default_model(10);
  const auto traces = ttm::run_ensemble(model, ttm::ensemble_seeds(1, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(ttm::build_hmm(traces, model, 0.5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildHmm)->Arg(100)->Arg(1000);

void BM_Viterbi(benchmark::State& state) {
  const auto model = default_model(10);
  const auto hmm = ttm::build_hmm(ttm::run_ensemble(model, ttm::ensemble_seeds(1, 1000)), model, 0.5);
  const auto trace = ttm::run_simulation(model, 7);
  const std::vector<double> probs(model.n(), 0.5);
  ttm::Rng noise(3);
  ttm::ObservationSequence obs;
  for (std::int64_t t = 0; t < std::min<std::int64_t>(state.range(0), trace.tick_count()); ++t)
    obs.push_back(ttm::sample_observation(ttm::emission_vector(model, trace.at_tick(t).active, probs), noise));
  for (auto _ : state) benchmark::DoNotOptimize(ttm::viterbi(hmm, obs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(obs.size()));
}
BENCHMARK(BM_Viterbi)->Arg(20)->Arg(100);

void BM_RunSample(benchmark::State& state) {
  ttm::SweepConfig config;
  config.samples = 2;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ttm::run_sample(config, 10, 0.6, 0.4, seed++));
}
BENCHMARK(BM_RunSample)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
