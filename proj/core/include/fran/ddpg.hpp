#pragma once

// Per-F-AP actor-critic agent: noisy deterministic policy, replay memory,
// TD critic, deterministic policy gradient actor, soft target tracking.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fran/env.hpp"
#include "fran/nn.hpp"
#include "fran/replay_buffer.hpp"

namespace fran {

struct DdpgHyperParams {
  double gamma = 0.9;
  double tau = 0.001;
  std::size_t replay_capacity = 20000;
  std::size_t batch_size = 64;
  double actor_lr = 0.001;
  double critic_lr = 0.0001;
  double noise_std_initial = 0.1;
  double noise_decay = 0.995;  // per episode
  double noise_floor = 0.01;
  std::vector<std::size_t> hidden{300, 100};
  double actor_output_scale = 0.1;
  double critic_output_scale = 0.001;

  void validate() const;
};

/// One replayed step. `action` is the raw actor output before sanitization.
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
};

struct EpisodeReport {
  double reward_sum = 0.0;
  double mean_loss = 0.0;  // over updates; 0 when none ran
  double mean_cost = 0.0;  // per slot
  double mean_delay = 0.0;
  double mean_energy = 0.0;
  std::size_t steps = 0;
  std::size_t updates = 0;
};

class DdpgAgent {
 public:
  DdpgAgent(std::size_t state_dim, std::size_t action_dim, DdpgHyperParams hp, std::uint64_t seed);

  /// pi(s) plus N(0, sigma^2) per coordinate when exploring, clipped to [0,1].
  std::vector<double> select_action(std::span<const double> state, bool explore);

  /// One Adam step on the mean squared TD error; returns the pre-step loss.
  double critic_update(std::span<const Transition* const> batch);
  /// One Adam ascent step on mean Q(s, pi(s)); returns the pre-step objective.
  double actor_update(std::span<const Transition* const> batch);
  /// theta' <- tau * theta + (1 - tau) * theta' for both target networks.
  void soft_update();

  void store(Transition t) { buffer_.push(std::move(t)); }
  std::vector<const Transition*> sample_batch();

  /// Runs one full episode: act, store, and (once the buffer holds a batch)
  /// critic, actor and target updates every step. Decays exploration noise at the end.
  EpisodeReport train_episode(FranEnv& env);

  /// Online actor and critic, the payload exchanged in federated rounds.
  FlatWeights export_shared() const;
  /// Loads online actor and critic and re-syncs both targets to them.
  void import_shared(const FlatWeights& weights);
  /// Actor, critic, target actor, target critic, in that order.
  FlatWeights export_weights() const;
  void import_weights(const FlatWeights& weights);

  const Mlp& actor() const noexcept { return actor_; }
  const Mlp& critic() const noexcept { return critic_; }
  const Mlp& target_actor() const noexcept { return target_actor_; }
  const Mlp& target_critic() const noexcept { return target_critic_; }
  Mlp& mutable_actor() noexcept { return actor_; }
  Mlp& mutable_critic() noexcept { return critic_; }
  Mlp& mutable_target_actor() noexcept { return target_actor_; }
  Mlp& mutable_target_critic() noexcept { return target_critic_; }

  const ReplayBuffer<Transition>& buffer() const noexcept { return buffer_; }
  const DdpgHyperParams& hyper_params() const noexcept { return hp_; }
  DdpgHyperParams& mutable_hyper_params() noexcept { return hp_; }
  double noise_std() const noexcept { return noise_std_; }
  void set_noise_std(double s) noexcept { noise_std_ = s; }
  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }

 private:
  std::size_t state_dim_;
  std::size_t action_dim_;
  DdpgHyperParams hp_;
  Mlp actor_;
  Mlp critic_;
  Mlp target_actor_;
  Mlp target_critic_;
  AdamState actor_opt_;
  AdamState critic_opt_;
  ReplayBuffer<Transition> buffer_;
  std::mt19937_64 rng_;
  double noise_std_;
};

}  // namespace fran
