#include <benchmark/benchmark.h>

#include "contrast/datagen.hpp"
#include "contrast/trainer.hpp"

namespace {

using namespace contrast;

void BM_EncoderForwardBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  RngStream init(3, "init");
  const auto params = make_encoder(32, 64, 16, init);
  RngStream data_rng(4, "bench-data");
  Matrix batch(n, 32);
  for (double& x : batch.data) x = data_rng.normal();
  Matrix upstream(n, 16);
  for (double& x : upstream.data) x = data_rng.normal();
  for (auto _ : state) {
    ForwardCache cache;
    encoder_forward(params, batch, &cache);
    benchmark::DoNotOptimize(encoder_backward(params, cache, upstream));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(16)->Arg(64)->Arg(256);

void BM_TrainEpoch(benchmark::State& state) {
  const LabeledDataset data = synthetic_dataset(10, 100, 32, 0.1, 5);
  AugmentConfig aug;
  aug.noise_sigma = 0.1;
  aug.seed = 5;
  TrainConfig cfg;
  cfg.spec = {LossVariant::MACL, TemperatureConfig(0.1, 0.5, 0.0), true, true};
  cfg.framework = Framework::InBatch;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  cfg.lr = 0.5;
  cfg.sgd_momentum = 0.9;
  cfg.epochs = 1;
  cfg.seed = 5;
  cfg.eval_k = 20;
  cfg.hidden_dim = std::nullopt;
  cfg.embed_dim = 16;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_run(data, aug, cfg).epochs.size());
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_KnnEvaluation(benchmark::State& state) {
  const LabeledDataset data = synthetic_dataset(10, static_cast<int>(state.range(0)), 16, 0.1, 9);
  const UnitEmbeddingBatch emb{data.points};
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_accuracy(emb, data.labels, data.num_classes, 20));
  }
  state.SetItemsProcessed(state.iterations() * data.size());
}
BENCHMARK(BM_KnnEvaluation)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
