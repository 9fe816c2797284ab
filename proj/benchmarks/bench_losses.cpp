#include <benchmark/benchmark.h>

#include "contrast/losses.hpp"
#include "contrast/rng.hpp"

namespace {

using namespace contrast;

std::vector<LogitsRow> make_rows(std::size_t n, std::size_t k) {
  RngStream rng(99, "bench-rows");
  std::vector<LogitsRow> rows(n);
  for (LogitsRow& row : rows) {
    row.pos = rng.uniform(-1.0, 1.0);
    row.negs.resize(k);
    for (double& s : row.negs) s = rng.uniform(-1.0, 1.0);
  }
  return rows;
}

void BM_InfoNceBatch(benchmark::State& state) {
  const auto rows = make_rows(64, static_cast<std::size_t>(state.range(0)));
  const LossSpec spec{LossVariant::InfoNCE, TemperatureConfig(0.1, 0.0, 0.0), false, false};
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_value(rows, spec).mean_loss);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_InfoNceBatch)->Arg(16)->Arg(128)->Arg(1024);

void BM_MaclBatch(benchmark::State& state) {
  const auto rows = make_rows(64, static_cast<std::size_t>(state.range(0)));
  const LossSpec spec{LossVariant::MACL, TemperatureConfig(0.1, 0.5, 0.0), true, true};
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_value(rows, spec).mean_loss);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MaclBatch)->Arg(16)->Arg(128)->Arg(1024);

void BM_InBatchContrast(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  RngStream rng(7, "bench-views");
  Matrix v1(n, 64);
  Matrix v2(n, 64);
  for (double& x : v1.data) x = rng.normal();
  for (double& x : v2.data) x = rng.normal();
  const auto b1 = make_unit_batch(std::move(v1));
  const auto b2 = make_unit_batch(std::move(v2));
  const LossSpec spec{LossVariant::MACL, TemperatureConfig(0.1, 0.5, 0.0), true, true};
  for (auto _ : state) {
    benchmark::DoNotOptimize(inbatch_contrast(b1, b2, spec).mean_loss);
  }
}
BENCHMARK(BM_InBatchContrast)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
