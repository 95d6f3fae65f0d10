#pragma once

// Value-based baseline over a discretized action space. One shared MLP trunk
// with an independent Q head per mobile device.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fran/ddpg.hpp"
#include "fran/env.hpp"
#include "fran/nn.hpp"
#include "fran/replay_buffer.hpp"

namespace fran {

/// Per-device catalog: index 0 runs locally; index 1 + (i-1)*L + (j-1) offloads
/// with compute level i and bandwidth level j, each level worth k/L.
class DiscreteActionTable {
 public:
  static constexpr std::size_t kLevels = 5;
  static constexpr std::size_t kPerMd = 1 + kLevels * kLevels;

  explicit DiscreteActionTable(std::size_t num_mds) : num_mds_(num_mds) {}

  std::size_t num_mds() const noexcept { return num_mds_; }
  std::size_t output_width() const noexcept { return kPerMd * num_mds_; }

  /// Raw 3M action (x block, y block, z block); throws ShapeError on a bad index.
  std::vector<double> decode(std::span<const std::size_t> indices) const;
  /// Nearest catalog index per device for a raw action.
  std::vector<std::size_t> encode(std::span<const double> raw) const;

  static std::size_t offload_index(std::size_t compute_level, std::size_t bandwidth_level);

 private:
  std::size_t num_mds_;
};

struct DqnHyperParams {
  double gamma = 0.9;
  std::size_t replay_capacity = 20000;
  std::size_t batch_size = 64;
  double lr = 0.001;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;  // per episode
  double epsilon_floor = 0.05;
  std::size_t target_sync_steps = 100;
  std::vector<std::size_t> hidden{300, 100};

  void validate() const;
};

struct DqnTransition {
  std::vector<double> state;
  std::vector<std::size_t> indices;
  double reward = 0.0;
  std::vector<double> next_state;
};

class DqnAgent {
 public:
  DqnAgent(std::size_t num_mds, DqnHyperParams hp, std::uint64_t seed);

  /// Per head: uniform index with probability epsilon, else argmax (lowest index on ties).
  std::vector<std::size_t> select(std::span<const double> state, double epsilon);
  /// Greedy raw action for evaluation.
  std::vector<double> greedy_action(std::span<const double> state);

  /// One Adam step on per-head squared TD errors (mean over batch, summed over
  /// heads); returns the pre-step loss.
  double td_update(std::span<const DqnTransition* const> batch);
  void sync_target() { target_ = online_; }

  void store(DqnTransition t) { buffer_.push(std::move(t)); }
  std::vector<const DqnTransition*> sample_batch();

  EpisodeReport train_episode(FranEnv& env);

  FlatWeights export_shared() const { return flatten(online_); }
  /// Loads the online network and syncs the target to it.
  void import_shared(const FlatWeights& weights);

  const Mlp& online() const noexcept { return online_; }
  const Mlp& target() const noexcept { return target_; }
  Mlp& mutable_online() noexcept { return online_; }
  const DiscreteActionTable& table() const noexcept { return table_; }
  const ReplayBuffer<DqnTransition>& buffer() const noexcept { return buffer_; }
  const DqnHyperParams& hyper_params() const noexcept { return hp_; }
  DqnHyperParams& mutable_hyper_params() noexcept { return hp_; }
  double epsilon() const noexcept { return epsilon_; }
  void set_epsilon(double e) noexcept { epsilon_ = e; }
  std::size_t state_dim() const noexcept { return state_dim_; }

 private:
  std::size_t state_dim_;
  DiscreteActionTable table_;
  DqnHyperParams hp_;
  Mlp online_;
  Mlp target_;
  AdamState opt_;
  ReplayBuffer<DqnTransition> buffer_;
  std::mt19937_64 rng_;
  double epsilon_;
  std::size_t update_steps_ = 0;
};

}  // namespace fran
