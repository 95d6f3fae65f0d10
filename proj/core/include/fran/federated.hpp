#pragma once

// Synchronous federated training: every round each F-AP agent downloads the
// global weights, trains locally, uploads; the coordinator averages.

#include <chrono>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fran/ddpg.hpp"
#include "fran/dqn.hpp"
#include "fran/env.hpp"
#include "fran/errors.hpp"
#include "fran/evaluation.hpp"
#include "fran/nn.hpp"

namespace fran {

enum class AgentKind : std::uint8_t { ddpg = 0, dqn = 1 };

const char* to_string(AgentKind kind);

struct GlobalModel {
  FlatWeights weights;
  std::uint64_t round = 0;
  AgentKind kind = AgentKind::ddpg;
};

struct RoundReport {
  std::uint64_t round = 0;
  std::vector<double> agent_rewards;  // episode reward sums, one per F-AP
  double mean_reward = 0.0;           // per-slot training reward averaged over F-APs
  EvalMetrics eval;                   // greedy evaluation of the broadcast model
  double wall_seconds = 0.0;
};

/// Element-wise mean of the uploads. Exact when all uploads are equal.
/// Throws ShapeError on an empty set or mismatched layouts.
FlatWeights federated_average(std::span<const FlatWeights> locals);

/// What an agent must offer to take part in a round. Only FlatWeights cross
/// the agent boundary.
template <typename A>
concept FederatedLearner = requires(A& agent, const A& cagent, const FlatWeights& w, FranEnv& env) {
  { cagent.export_shared() } -> std::same_as<FlatWeights>;
  agent.import_shared(w);
  { agent.train_episode(env) } -> std::same_as<EpisodeReport>;
};

/// One synchronous round. Agents train concurrently when `parallel` is set;
/// any agent failure propagates and aborts the round.
template <FederatedLearner Agent>
RoundReport run_round(std::span<Agent> agents, std::span<FranEnv> envs, GlobalModel& global,
                      std::size_t episodes_per_round, bool parallel = false) {
  if (agents.empty() || agents.size() != envs.size())
    throw ShapeError("run_round: need one environment per agent and at least one agent");
  const auto start = std::chrono::steady_clock::now();

  const std::size_t n = agents.size();
  std::vector<FlatWeights> uploads(n);
  std::vector<double> rewards(n, 0.0);
  std::vector<double> slot_rewards(n, 0.0);

  auto local_work = [&](std::size_t i) {
    // Skip the download when nothing changed (N = 1, or no local drift).
    if (agents[i].export_shared() != global.weights) agents[i].import_shared(global.weights);
    std::size_t steps = 0;
    for (std::size_t e = 0; e < episodes_per_round; ++e) {
      const EpisodeReport rep = agents[i].train_episode(envs[i]);
      rewards[i] += rep.reward_sum;
      slot_rewards[i] += rep.reward_sum;
      steps += rep.steps;
    }
    if (steps) slot_rewards[i] /= static_cast<double>(steps);
    uploads[i] = agents[i].export_shared();
  };

  if (parallel && n > 1) {
    std::vector<std::future<void>> jobs;
    jobs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, local_work, i));
    // Barrier: every upload completes before averaging; get() rethrows failures.
    for (auto& j : jobs) j.wait();
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < n; ++i) local_work(i);
  }

  global.weights = federated_average(uploads);
  ++global.round;
  for (std::size_t i = 0; i < n; ++i)
    if (uploads[i] != global.weights) agents[i].import_shared(global.weights);

  RoundReport report;
  report.round = global.round;
  report.agent_rewards = std::move(rewards);
  for (double r : slot_rewards) report.mean_reward += r / static_cast<double>(n);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

struct TrainingConfig {
  EnvConfig env;
  AgentKind kind = AgentKind::ddpg;
  DdpgHyperParams ddpg;
  DqnHyperParams dqn;
  std::size_t rounds = 200;
  std::size_t episodes_per_round = 1;
  std::size_t eval_episodes_per_round = 1;
  std::uint64_t seed = 1;
  bool parallel = false;
  /// When set, a round checkpoint is written every `checkpoint_every` rounds and after the last.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::size_t checkpoint_every = 50;

  void validate() const;
};

struct TrainingResult {
  std::vector<RoundReport> rounds;
  GlobalModel final_model;
};

/// Called after every round; useful for progress output.
using RoundCallback = std::function<void(const RoundReport&)>;

/// Builds N agents from a common initial model, runs `rounds` federated
/// rounds, and evaluates the broadcast model greedily after each round.
/// Deterministic given the config.
TrainingResult run_training(const TrainingConfig& config, const RoundCallback& on_round = {});

/// Evaluation root used for the per-round greedy evaluation of a training run.
std::uint64_t round_eval_root(std::uint64_t training_seed);

/// Greedy per-F-AP policy reconstructed from a global model.
PolicyFactory learned_policy(const GlobalModel& model, const TrainingConfig& config);

// Round checkpoint: char[4] "FRRD", u32 version, u64 round, u8 agent kind,
// u64 layout hash, then the weight checkpoint.
void write_round_checkpoint(std::ostream& out, const GlobalModel& model);
GlobalModel read_round_checkpoint(std::istream& in);
void save_round_checkpoint(const std::filesystem::path& path, const GlobalModel& model);
GlobalModel load_round_checkpoint(const std::filesystem::path& path);

}  // namespace fran
