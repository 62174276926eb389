#include <benchmark/benchmark.h>

#include "taac/nets.hpp"
#include "taac/rng.hpp"
#include "taac/soccer.hpp"
#include "taac/tensor.hpp"

namespace {

using namespace taac;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(rows, cols, std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng);
  const Tensor b = random_matrix(n, n, rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_ActorForward(benchmark::State& state) {
  ArchConfig arch;
  arch.d_model = static_cast<int>(state.range(0));
  Rng rng(2);
  const ActorNet actor(arch, true, rng);
  const Tensor obs = random_matrix(3, static_cast<std::size_t>(arch.obs_dim), rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(actor.forward(obs, 3).probs.data().data());
}
BENCHMARK(BM_ActorForward)->Arg(32)->Arg(64);

void BM_ActorForwardBackward(benchmark::State& state) {
  ArchConfig arch;
  Rng rng(3);
  const ActorNet actor(arch, true, rng);
  const Tensor obs = random_matrix(3, static_cast<std::size_t>(arch.obs_dim), rng);
  for (auto _ : state) {
    backward(sum(actor.forward(obs, 3).log_probs));
  }
}
BENCHMARK(BM_ActorForwardBackward);

void BM_EnvStep(benchmark::State& state) {
  const soccer::EnvConfig cfg;
  Rng rng(4);
  soccer::Game game(cfg, soccer::SpawnMode::random_spawns, true, 5);
  soccer::JointAction actions(static_cast<std::size_t>(cfg.player_count()));
  for (auto _ : state) {
    if (game.done()) game = soccer::Game(cfg, soccer::SpawnMode::random_spawns, true, rng.next_u64());
    for (auto& a : actions) a = static_cast<int>(rng.below(soccer::kActionCount));
    benchmark::DoNotOptimize(game.advance(actions).rewards.data());
  }
}
BENCHMARK(BM_EnvStep);

}  // namespace
BENCHMARK_MAIN();
