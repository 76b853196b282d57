// Serial reference vs OpenMP kernels. Arg = worker count for the OpenMP
// variants; speedup needs as many cores.

#include <benchmark/benchmark.h>

#include "gnode/evaluation/evaluation.hpp"
#include "gnode/parallel.hpp"
#include "gnode/training/trainer.hpp"

using namespace gnode;

namespace {

models::Model make(models::Variant v, std::size_t n, bool external) {
  models::ModelConfig c;
  c.variant = v;
  c.system_size = n;
  c.external_field = external;
  return models::Model(c, 1);
}

const training::Dataset& pendulum_data() {
  static const training::Dataset ds = [] {
    const auto spec = physics::SystemSpec::pendulum(3);
    auto cfg = training::DataConfig::defaults_for(spec.kind);
    cfg.n_traj = 2;
    cfg.record_every = 100;
    return training::generate_dataset(spec, cfg);
  }();
  return ds;
}

std::vector<std::size_t> first_batch(const training::Dataset& ds) {
  return {ds.train.begin(), ds.train.begin() + 100};
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const auto& ds = pendulum_data();
  const auto m = make(models::Variant::Cgnode, 3, true);
  const auto idx = first_batch(ds);
  for (auto _ : state) benchmark::DoNotOptimize(training::batch_gradient_serial(m, ds, idx));
}

void BM_BatchGradientOpenMP(benchmark::State& state) {
  const auto& ds = pendulum_data();
  const auto m = make(models::Variant::Cgnode, 3, true);
  const auto idx = first_batch(ds);
  set_workers(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(training::batch_gradient(m, ds, idx));
}

evaluation::RolloutConfig ensemble_cfg() {
  auto c = evaluation::RolloutConfig::defaults_for(physics::SystemKind::Spring);
  c.horizon = 2.0;
  return c;
}

void BM_EnsembleSerial(benchmark::State& state) {
  const auto m = make(models::Variant::Mcgnode, 5, false);
  const auto spec = physics::SystemSpec::spring(5);
  for (auto _ : state) benchmark::DoNotOptimize(evaluation::evaluate_ensemble_serial(m, spec, 4, 1, ensemble_cfg()));
}

void BM_EnsembleOpenMP(benchmark::State& state) {
  const auto m = make(models::Variant::Mcgnode, 5, false);
  const auto spec = physics::SystemSpec::spring(5);
  set_workers(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluation::evaluate_ensemble(m, spec, 4, 1, ensemble_cfg()));
}

training::DataConfig traj_cfg() {
  auto c = training::DataConfig::defaults_for(physics::SystemKind::Spring);
  c.n_traj = 8;
  return c;
}

void BM_TrajectoriesSerial(benchmark::State& state) {
  const auto spec = physics::SystemSpec::spring(5);
  for (auto _ : state) benchmark::DoNotOptimize(training::generate_trajectories_serial(spec, traj_cfg()));
}

void BM_TrajectoriesOpenMP(benchmark::State& state) {
  const auto spec = physics::SystemSpec::spring(5);
  set_workers(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(training::generate_trajectories(spec, traj_cfg()));
}

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnsembleSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TrajectoriesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrajectoriesOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
