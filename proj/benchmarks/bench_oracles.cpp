#include <memory>

#include <benchmark/benchmark.h>

#include "home/experiment.hpp"
#include "home/inner_solvers.hpp"
#include "home/matrix_recovery.hpp"

namespace {

std::shared_ptr<const home::RecoveryInstance> instance(home::RecoveryModel model, int n) {
  home::ModelConfig cfg;
  cfg.model = model;
  const int n2 = model == home::RecoveryModel::kSymmetric ? n : (4 * n) / 5;
  return std::make_shared<const home::RecoveryInstance>(home::generate_instance(cfg, n, n2, 5, 1));
}

void BM_PhiEvaluate(benchmark::State& state) {
  const auto inst = instance(home::RecoveryModel::kSymmetric, static_cast<int>(state.range(0)));
  const auto f = home::phi_oracle(inst);
  const home::Point x = home::initial_point(1, f->dimension());
  for (auto _ : state) benchmark::DoNotOptimize(f->evaluate(x));
}
BENCHMARK(BM_PhiEvaluate)->Arg(20)->Arg(50);

void BM_PsiEvaluate(benchmark::State& state) {
  const auto inst = instance(home::RecoveryModel::kAsymmetric, static_cast<int>(state.range(0)));
  const auto f = home::psi_oracle(inst);
  const home::Point x = home::initial_point(1, f->dimension());
  for (auto _ : state) benchmark::DoNotOptimize(f->evaluate(x));
}
BENCHMARK(BM_PsiEvaluate)->Arg(20)->Arg(50);

void BM_ProxSgdss(benchmark::State& state) {
  const auto inst = instance(home::RecoveryModel::kSymmetric, 50);
  const auto f = home::phi_oracle(inst);
  const auto params = home::EnvelopeParams::make(1.25, 0.5);
  const home::Point x = home::initial_point(1, f->dimension());
  home::SgdssSchedule schedule;
  schedule.max_iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(home::solve_prox_sgdss(x, *f, params, schedule));
  }
  state.SetItemsProcessed(state.iterations() * schedule.max_iterations);
}
BENCHMARK(BM_ProxSgdss)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
