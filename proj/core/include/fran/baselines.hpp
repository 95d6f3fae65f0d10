#pragma once

// Non-learning reference policies and the exact per-slot optimum.

#include <span>
#include <vector>

#include "fran/env.hpp"

namespace fran {

/// Every task runs on its own device.
ActionVector local_policy(std::size_t num_mds);

/// Every task is offloaded; compute and bandwidth split evenly.
ActionVector equal_policy(std::size_t num_mds);

/// Minimizer of sum_m a_m / y_m over the unit simplex: y_m = sqrt(a_m) / sum_j sqrt(a_j).
/// Empty input yields an empty result; throws std::invalid_argument on a_m <= 0.
std::vector<double> closed_form_allocation(std::span<const double> weights);

/// Objective sum_m a_m / y_m.
double allocation_objective(std::span<const double> weights, std::span<const double> shares);

struct OracleResult {
  ActionVector action;
  double cost = 0.0;
};

/// Largest M the oracle will enumerate (2^M offloading vectors).
inline constexpr std::size_t kOracleMaxMds = 12;

/// Exact minimizer of the per-slot cost: enumerates offloading vectors and
/// splits compute and bandwidth in closed form over the offloaded set. The
/// allocation floor is not imposed. Throws ConfigError above kOracleMaxMds.
OracleResult oracle_slot_optimum(const SlotState& state, const FogAccessPoint& fap,
                                 const EnvConfig& config);

}  // namespace fran
