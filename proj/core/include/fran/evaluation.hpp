#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fran/env.hpp"

namespace fran {

/// Per-slot means over every evaluated F-AP, episode and slot.
struct EvalMetrics {
  double mean_reward = 0.0;
  double mean_cost = 0.0;
  double mean_delay = 0.0;
  double mean_energy = 0.0;
  std::size_t slots = 0;
};

/// Maps the live environment (state, F-AP, config) to a feasible action.
using Policy = std::function<ActionVector(const FranEnv&)>;
/// Per-F-AP policy factory, so learned policies can hold per-F-AP state.
using PolicyFactory = std::function<Policy(int fap_id)>;

/// Evaluation seed for (experiment seed, F-AP, episode). Independent of the
/// policy, so every policy sees identical slots.
std::uint64_t eval_seed(std::uint64_t root, int fap_id, std::size_t episode);

/// Runs `episodes` episodes on each of config.num_faps cells. Actions never
/// influence state transitions, so all policies are scored on the same slots.
EvalMetrics evaluate(const EnvConfig& config, const PolicyFactory& factory, std::uint64_t root_seed,
                     std::size_t episodes);

Policy local_baseline();
Policy equal_baseline();
Policy oracle_baseline();

}  // namespace fran
