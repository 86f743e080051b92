#include <benchmark/benchmark.h>

#include <random>

#include "pstd/compression.hpp"
#include "pstd/covariance.hpp"
#include "pstd/envs.hpp"
#include "pstd/experiments/random_system.hpp"
#include "pstd/learners.hpp"

namespace {

using namespace pstd;

experiments::RandomSystemShape shape(benchmark::State& state) {
  experiments::RandomSystemShape s;
  s.samples = state.range(0);
  s.history_dim = state.range(1);
  s.future_dim = state.range(1);
  return s;
}

void BM_CovarianceSet(benchmark::State& state) {
  const TransitionSet data = experiments::random_transitions(1, shape(state));
  for (auto _ : state) benchmark::DoNotOptimize(build_covariance_set(data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CovarianceSet)->Args({1000, 10})->Args({1000, 100})->Args({10000, 100});

void BM_FitSubspace(benchmark::State& state) {
  const CovarianceSet cs =
      build_covariance_set(experiments::random_transitions(2, shape(state)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_subspace(cs, 3));
}
BENCHMARK(BM_FitSubspace)->Args({2000, 10})->Args({2000, 100})->Args({2000, 500});

void BM_Pstd(benchmark::State& state) {
  const CovarianceSet cs =
      build_covariance_set(experiments::random_transitions(3, shape(state)));
  const Subspace sub = fit_subspace(cs, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pstd::pstd(cs, sub.v_hat, 0.9));
}
BENCHMARK(BM_Pstd)->Args({2000, 100})->Args({2000, 500});

void BM_Lstd(benchmark::State& state) {
  const CovarianceSet cs =
      build_covariance_set(experiments::random_transitions(4, shape(state)));
  for (auto _ : state) benchmark::DoNotOptimize(lstd(cs, 0.9));
}
BENCHMARK(BM_Lstd)->Args({2000, 100})->Args({2000, 500});

VectorXd random_state(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> ln(0.0, 0.1);
  VectorXd x(100);
  for (Index i = 0; i < 100; ++i) x(i) = ln(rng);
  return x;
}

void BM_CanonicalBasis(benchmark::State& state) {
  const VectorXd x = random_state(5);
  for (auto _ : state) benchmark::DoNotOptimize(canonical_basis(x));
}
BENCHMARK(BM_CanonicalBasis);

void BM_ExtendedBasis(benchmark::State& state) {
  const VectorXd x = random_state(6);
  for (auto _ : state) benchmark::DoNotOptimize(extended_basis(x));
}
BENCHMARK(BM_ExtendedBasis);

void BM_SimulateGbm(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_gbm(0.02, 0.0004, state.range(0), 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateGbm)->Arg(50100);

}  // namespace

BENCHMARK_MAIN();
