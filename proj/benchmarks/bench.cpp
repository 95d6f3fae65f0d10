#include <benchmark/benchmark.h>

#include <random>

#include "fran/baselines.hpp"
#include "fran/ddpg.hpp"
#include "fran/dqn.hpp"
#include "fran/env.hpp"
#include "fran/federated.hpp"
#include "fran/nn.hpp"

using namespace fran;

namespace {

Eigen::MatrixXd random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Topology actor_topology(std::size_t m) {
  return {state_dim(m), {300, 100}, action_dim(m), Activation::relu, Activation::sigmoid, 1.0};
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const Mlp net = init_mlp(1, actor_topology(3));
  const Eigen::MatrixXd x = random_batch(state_dim(3), static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(predict(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(64);

static void BM_ForwardBackward(benchmark::State& state) {
  const Mlp net = init_mlp(1, actor_topology(3));
  const Eigen::MatrixXd x = random_batch(state_dim(3), static_cast<std::size_t>(state.range(0)), 2);
  const Eigen::MatrixXd g = random_batch(action_dim(3), static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    const ForwardPass pass = forward(net, x);
    benchmark::DoNotOptimize(backward(net, pass.cache, g));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(64);

static void BM_DdpgEpisode(benchmark::State& state) {
  EnvConfig cfg;
  DdpgAgent agent(state_dim(3), action_dim(3), DdpgHyperParams{}, 1);
  FranEnv env(cfg);
  agent.train_episode(env);  // fill past warm-up
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_episode(env));
  state.SetItemsProcessed(state.iterations() * cfg.steps_per_episode);
}
BENCHMARK(BM_DdpgEpisode)->Unit(benchmark::kMillisecond);

static void BM_DqnEpisode(benchmark::State& state) {
  EnvConfig cfg;
  DqnAgent agent(3, DqnHyperParams{}, 1);
  FranEnv env(cfg);
  agent.train_episode(env);
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_episode(env));
  state.SetItemsProcessed(state.iterations() * cfg.steps_per_episode);
}
BENCHMARK(BM_DqnEpisode)->Unit(benchmark::kMillisecond);

static void BM_FederatedAverage(benchmark::State& state) {
  std::vector<FlatWeights> ups;
  for (int n = 0; n < state.range(0); ++n) ups.push_back(flatten(init_mlp(static_cast<std::uint64_t>(n), actor_topology(5))));
  for (auto _ : state) benchmark::DoNotOptimize(federated_average(ups));
}
BENCHMARK(BM_FederatedAverage)->Arg(2)->Arg(4);

static void BM_SlotCost(benchmark::State& state) {
  EnvConfig cfg;
  cfg.mds_per_fap = static_cast<int>(state.range(0));
  FranEnv env(cfg);
  env.reset(1);
  const ActionVector a = equal_policy(env.num_mds());
  for (auto _ : state) benchmark::DoNotOptimize(slot_cost(env.state(), a, env.fap(), cfg));
}
BENCHMARK(BM_SlotCost)->Arg(3)->Arg(10);

static void BM_Oracle(benchmark::State& state) {
  EnvConfig cfg;
  cfg.mds_per_fap = static_cast<int>(state.range(0));
  FranEnv env(cfg);
  env.reset(1);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_slot_optimum(env.state(), env.fap(), cfg));
}
BENCHMARK(BM_Oracle)->Arg(3)->Arg(7)->Arg(12);
BENCHMARK_MAIN();
