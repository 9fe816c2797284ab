#include <benchmark/benchmark.h>

#include "contrast/gradients.hpp"
#include "contrast/losses.hpp"
#include "contrast/rng.hpp"

namespace {

using namespace contrast;

struct Geometry {
  Vector anchor;
  Vector pos_key;
  Matrix negs;
};

Geometry make_geometry(std::size_t m, std::size_t k) {
  RngStream rng(13, "bench-geometry");
  Matrix fm(1, m), gm(1, m), nm(k, m);
  for (double& x : fm.data) x = rng.normal();
  for (double& x : gm.data) x = rng.normal();
  for (double& x : nm.data) x = rng.normal();
  Geometry geo;
  const auto f = make_unit_batch(std::move(fm));
  const auto g = make_unit_batch(std::move(gm));
  geo.anchor.assign(f.row(0).begin(), f.row(0).end());
  geo.pos_key.assign(g.row(0).begin(), g.row(0).end());
  geo.negs = make_unit_batch(std::move(nm)).data;
  return geo;
}

void BM_AnalyticGradients(benchmark::State& state) {
  const auto geo = make_geometry(static_cast<std::size_t>(state.range(0)),
                                 static_cast<std::size_t>(state.range(1)));
  const LossSpec spec{LossVariant::MACL, TemperatureConfig(0.1, 0.5, 0.0), true, true};
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic_gradients(geo.anchor, geo.pos_key, geo.negs, spec, 0.1));
  }
}
BENCHMARK(BM_AnalyticGradients)->Args({8, 16})->Args({64, 64})->Args({128, 1024});

void BM_FiniteDifferenceAnchor(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  const auto geo = make_geometry(m, static_cast<std::size_t>(state.range(1)));
  const auto forward = [&](const std::vector<double>& x) {
    LogitsRow row;
    row.pos = dot(std::span<const double>(x), geo.pos_key);
    for (std::size_t j = 0; j < geo.negs.rows; ++j) {
      row.negs.push_back(dot(std::span<const double>(x), geo.negs.row(j)));
    }
    return infonce_value(row, 0.1);
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(finite_difference(forward, geo.anchor));
  }
}
BENCHMARK(BM_FiniteDifferenceAnchor)->Args({8, 16})->Args({64, 64});

void BM_DwDtau(benchmark::State& state) {
  RngStream rng(17, "bench-dw");
  LogitsRow row;
  row.pos = rng.uniform(-1.0, 1.0);
  row.negs.resize(static_cast<std::size_t>(state.range(0)));
  for (double& s : row.negs) s = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dw_dtau(row, 0.1));
  }
}
BENCHMARK(BM_DwDtau)->Arg(16)->Arg(1024);

}  // namespace
