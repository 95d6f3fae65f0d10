#include "fran/evaluation.hpp"

#include "fran/baselines.hpp"
#include "fran/seed.hpp"

namespace fran {

std::uint64_t eval_seed(std::uint64_t root, int fap_id, std::size_t episode) {
  return mix_seed(mix_seed(root, 0xE7A1u + static_cast<std::uint64_t>(fap_id)), episode);
}

EvalMetrics evaluate(const EnvConfig& config, const PolicyFactory& factory, std::uint64_t root_seed,
                     std::size_t episodes) {
  EvalMetrics out;
  for (int n = 0; n < config.num_faps; ++n) {
    FranEnv env(config, n);
    Policy policy = factory(n);
    for (std::size_t e = 0; e < episodes; ++e) {
      env.reset(eval_seed(root_seed, n, e));
      while (!env.done()) {
        const StepResult r = env.step(policy(env));
        out.mean_reward += r.reward;
        out.mean_cost += r.cost.cost;
        out.mean_delay += r.cost.total_delay;
        out.mean_energy += r.cost.total_energy;
        ++out.slots;
      }
    }
  }
  if (out.slots > 0) {
    const double n = static_cast<double>(out.slots);
    out.mean_reward /= n;
    out.mean_cost /= n;
    out.mean_delay /= n;
    out.mean_energy /= n;
  }
  return out;
}

Policy local_baseline() {
  return [](const FranEnv& env) { return local_policy(env.num_mds()); };
}

Policy equal_baseline() {
  return [](const FranEnv& env) { return equal_policy(env.num_mds()); };
}

Policy oracle_baseline() {
  return [](const FranEnv& env) {
    ActionVector a = oracle_slot_optimum(env.state(), env.fap(), env.config()).action;
    // Keep the env's floor satisfied; closed-form shares essentially never hit it.
    for (std::size_t m = 0; m < a.num_mds(); ++m) {
      if (!a.offload[m]) continue;
      if (a.compute_share[m] < kMinAllocation || a.bandwidth_share[m] < kMinAllocation)
        return sanitize_action(to_raw(a), a.num_mds());
    }
    return a;
  };
}

}  // namespace fran
