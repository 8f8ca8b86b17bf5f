#include <benchmark/benchmark.h>

#include "trojanscan/network.hpp"
#include "trojanscan/rng.hpp"

namespace {

using namespace trojanscan;

Tensor random_batch(std::size_t rows, std::size_t cols) {
  Rng rng(2);
  Tensor t({rows, cols});
  for (auto& v : t.data) v = rng.uniform();
  return t;
}

void BM_Forward(benchmark::State& state) {
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Network net = Network::initialized(mlp_architecture(64, 32, 4), rng);
  const Tensor batch = random_batch(batch_size, 64);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(10)->Arg(32)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Network net = Network::initialized(mlp_architecture(64, 32, 4), rng);
  const Tensor batch = random_batch(batch_size, 64);
  const Tensor upstream = random_batch(batch_size, 4);
  for (auto _ : state) {
    const Tape tape = net.forward_recorded(batch);
    benchmark::DoNotOptimize(tape.backward(upstream));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(32)->Arg(256);

}  // namespace
