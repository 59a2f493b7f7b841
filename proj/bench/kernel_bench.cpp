// Serial reference kernels against their OpenMP counterparts, plus an end-to-end
// count over generated Customer rows in both kernel modes.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kernels/kernels.hpp"
#include "ssq/coordinator.hpp"
#include "ssq/owner.hpp"
#include "ssq/tpch.hpp"

namespace ssq {
namespace {

std::vector<Fp> random_elements(size_t count, const PrimeField& f, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Fp> v(count);
  for (auto& x : v) x = Fp{rng() % f.modulus()};
  return v;
}

const kernels::KernelSet& pick(int64_t which) {
  return which == 0 ? kernels::serial() : kernels::parallel();
}

// args: rows, symbols, kernel set (0 serial, 1 OpenMP)
void BM_Match(benchmark::State& state) {
  const size_t rows = state.range(0), symbols = state.range(1), alphabet = 10;
  const auto& k = pick(state.range(2));
  PrimeField f;
  auto cells = random_elements(rows * symbols * alphabet, f, 1);
  auto word = random_elements(symbols * alphabet, f, 2);
  std::vector<Fp> out(rows);
  kernels::CellMatrix m{cells.data(), rows, symbols * alphabet, alphabet};
  for (auto _ : state) {
    kernels::Counts c;
    k.match_rows(f, m, word.data(), out.data(), c);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(k.name);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}
BENCHMARK(BM_Match)
    ->ArgsProduct({{10'000, 100'000}, {2, 7}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

void BM_WeightedSum(benchmark::State& state) {
  const size_t rows = state.range(0), width = state.range(1);
  const auto& k = pick(state.range(2));
  PrimeField f;
  auto weights = random_elements(rows, f, 3);
  auto data = random_elements(rows * width, f, 4);
  std::vector<Fp> out(width);
  for (auto _ : state) {
    kernels::Counts c;
    k.weighted_sum(f, weights.data(), data.data(), rows, width, out.data(), c);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(k.name);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}
BENCHMARK(BM_WeightedSum)
    ->ArgsProduct({{10'000, 100'000}, {20, 120}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

void BM_Range(benchmark::State& state) {
  const size_t rows = state.range(0), bits = state.range(1);
  const auto& k = pick(state.range(2));
  PrimeField f;
  auto data = random_elements(rows * bits, f, 5);
  auto low = random_elements(bits, f, 6);
  auto high = random_elements(bits, f, 7);
  std::vector<Fp> out(rows);
  kernels::BitMatrix m{data.data(), rows, bits};
  for (auto _ : state) {
    kernels::Counts c;
    k.range_marks(f, m, low.data(), high.data(), true, out.data(), c);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(k.name);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}
BENCHMARK(BM_Range)
    ->ArgsProduct({{10'000, 100'000}, {8, 16}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

// Count NK = 7 through the coordinator; sharing happens once, outside timing.
void BM_CustomerCount(benchmark::State& state) {
  const size_t rows = state.range(0);
  const KernelMode mode = state.range(1) == 0 ? KernelMode::kSerial : KernelMode::kParallel;
  const Relation customer = make_customer(rows, 1);
  const auto plan = QueryPlan::count("Customer", "NK", "7");
  OwnerOptions o;
  o.params.rng_seed = 9;
  o.params.servers = required_servers(plan, plan_schemas({customer}, o).front(), nullptr);
  Cluster cluster({share_relation(customer, o)}, mode);
  CoordinatorOptions co;
  co.seed = 1;
  Coordinator c(cluster.engines(), co);
  for (auto _ : state) benchmark::DoNotOptimize(c.run_count(plan));
  state.SetLabel(mode == KernelMode::kSerial ? "serial" : "omp");
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}
BENCHMARK(BM_CustomerCount)
    ->ArgsProduct({{10'000, 100'000}, {0, 1}})
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ssq

BENCHMARK_MAIN();
