#include <benchmark/benchmark.h>

#include "xgen/gradcheck.hpp"
#include "xgen/training.hpp"

using namespace xgen;

namespace {

void BM_MatMul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = sample_gaussian(rng, {n, n});
  const Tensor b = sample_gaussian(rng, {n, n});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_MatMul)->Arg(32)->Arg(128)->Arg(256);

void BM_MatMulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor a = random_parameter({n, n}, rng);
  Tensor b = random_parameter({n, n}, rng);
  for (auto _ : state) {
    backward(sum(matmul(a, b)));
    a.zero_grad();
    b.zero_grad();
  }
}
BENCHMARK(BM_MatMulBackward)->Arg(64)->Arg(128);

void BM_GruStep(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const GruCell cell = GruCell::init(64, hidden, rng);
  const Tensor x = sample_gaussian(rng, {64, 64});
  const Tensor h = sample_gaussian(rng, {64, hidden});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(cell.step(cell.input_projection(x), h).data().data());
}
BENCHMARK(BM_GruStep)->Arg(64)->Arg(128);

void BM_AutoencoderStep(benchmark::State& state) {
  CorpusSpec spec;
  spec.count = 200;
  Rng rng(4);
  const auto corpus = generate_synthetic_corpus(spec, rng);
  TrainConfig c;
  c.d_emb = 32;
  c.d_hidden = static_cast<std::size_t>(state.range(0));
  c.d_code = 32;
  c.d_noise = 16;
  c.d_cond = 16;
  c.d_reason = 16;
  c.batch_size = 64;
  Trainer t(c, Vocabulary::build(corpus), spec.taxonomy);
  const Batch b = t.epoch_batches(corpus).front();
  for (auto _ : state) benchmark::DoNotOptimize(t.ae_phase_step(b));
}
BENCHMARK(BM_AutoencoderStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  CorpusSpec spec;
  spec.count = 200;
  Rng rng(5);
  const auto corpus = generate_synthetic_corpus(spec, rng);
  TrainConfig c;
  c.d_emb = 32;
  c.d_hidden = 64;
  c.d_code = 32;
  c.d_noise = 16;
  c.d_cond = 16;
  c.d_reason = 16;
  c.gan_hidden = 64;
  c.clf_hidden = 32;
  c.batch_size = 64;
  Trainer t(c, Vocabulary::build(corpus), spec.taxonomy);
  const Batch b = t.epoch_batches(corpus).front();
  for (auto _ : state) t.train_step(b);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
