// Serial reference kernels against the OpenMP versions, plus serial against
// parallel Monte Carlo execution of the default scenario.

#include <benchmark/benchmark.h>

#include "irs/harness.hpp"
#include "irs/random.hpp"
#include "irs/tensor.hpp"

namespace {

irs::Matrix random_matrix(irs::Index rows, irs::Index cols, std::uint64_t key) {
  irs::Substream s(key);
  return s.complex_normal(rows, cols);
}

irs::ComplexTensor random_tensor(std::vector<irs::Index> shape, std::uint64_t key) {
  irs::ComplexTensor t(std::move(shape));
  irs::Substream s(key);
  for (auto& v : t.data()) v = s.complex_normal();
  return t;
}

void BM_KhatriRaoReference(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_matrix(n, 16, 1), b = random_matrix(n, 16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(irs::reference::khatri_rao(a, b));
}

void BM_KhatriRaoParallel(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_matrix(n, 16, 1), b = random_matrix(n, 16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(irs::khatri_rao(a, b));
}

void BM_KronReference(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(irs::reference::kron(a, b));
}

void BM_KronParallel(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(irs::kron(a, b));
}

void BM_UnfoldReference(benchmark::State& state) {
  const auto n = state.range(0);
  const auto t = random_tensor({n, n, n, 4}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(irs::reference::unfold(t, 2));
}

void BM_UnfoldParallel(benchmark::State& state) {
  const auto n = state.range(0);
  const auto t = random_tensor({n, n, n, 4}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(irs::unfold(t, 2));
}

void BM_ModeProductReference(benchmark::State& state) {
  const auto n = state.range(0);
  const auto t = random_tensor({n, n, n}, 6);
  const auto a = random_matrix(n, n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(irs::reference::mode_n_product(t, a, 1));
}

void BM_ModeProductParallel(benchmark::State& state) {
  const auto n = state.range(0);
  const auto t = random_tensor({n, n, n}, 6);
  const auto a = random_matrix(n, n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(irs::mode_n_product(t, a, 1));
}

void BM_Scenario(benchmark::State& state) {
  const auto exec = state.range(0) == 0 ? irs::Execution::Serial : irs::Execution::Parallel;
  const irs::SystemConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(irs::run_scenario(config, 16, {}, exec));
}

}  // namespace

BENCHMARK(BM_KhatriRaoReference)->Arg(64)->Arg(256);
BENCHMARK(BM_KhatriRaoParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_KronReference)->Arg(16)->Arg(48);
BENCHMARK(BM_KronParallel)->Arg(16)->Arg(48);
BENCHMARK(BM_UnfoldReference)->Arg(16)->Arg(32);
BENCHMARK(BM_UnfoldParallel)->Arg(16)->Arg(32);
BENCHMARK(BM_ModeProductReference)->Arg(16)->Arg(48);
BENCHMARK(BM_ModeProductParallel)->Arg(16)->Arg(48);
BENCHMARK(BM_Scenario)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
